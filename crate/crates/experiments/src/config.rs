//! TOML experiment configuration: one schema shared by every subcommand,
//! fully defaulted except for the mandatory seed.

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use std::path::Path;

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    /// Mandatory unless --seed is passed on the command line.
    pub seed: Option<u64>,
    #[serde(default)]
    pub measure: MeasureCfg,
    #[serde(default)]
    pub perturbation: PerturbationCfg,
    #[serde(default)]
    pub mc: McCfg,
    #[serde(default)]
    pub flow: FlowCfg,
    #[serde(default)]
    pub grid: GridCfg,
    #[serde(default)]
    pub sphere: SphereCfg,
    #[serde(default)]
    pub tail: TailCfg,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeasureCfg {
    pub kappa: f64,
    /// Cosine perturbation amplitude of the source potential (0 = Gaussian).
    pub lambda: f64,
}

impl Default for MeasureCfg {
    fn default() -> Self {
        Self { kappa: 1.0, lambda: 0.0 }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PerturbationCfg {
    /// zero | linear | abs | smoothed-abs
    pub family: String,
    pub coeff: f64,
    pub eps: f64,
}

impl Default for PerturbationCfg {
    fn default() -> Self {
        Self { family: "smoothed-abs".into(), coeff: 1.0, eps: 1e-3 }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McCfg {
    pub n_paths: usize,
    pub dt: f64,
}

impl Default for McCfg {
    fn default() -> Self {
        Self { n_paths: 200_000, dt: 1e-3 }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowCfg {
    pub tau: f64,
    pub n_steps: usize,
    /// Velocity-oracle quadrature tolerance.
    pub oracle_tol: f64,
    /// Node grid the flow is evaluated on (interpolated in between).
    pub node_min: f64,
    pub node_max: f64,
    pub node_count: usize,
    /// Quantile count for the pushforward distance.
    pub quantile_count: usize,
    /// Grid for Lipschitz / round-trip scans.
    pub scan_min: f64,
    pub scan_max: f64,
    pub scan_count: usize,
    /// Absolute ODE accuracy budget for round-trip checks.
    pub ode_tol: f64,
}

impl Default for FlowCfg {
    fn default() -> Self {
        Self {
            tau: 8.0,
            n_steps: 800,
            oracle_tol: 1e-9,
            node_min: -4.2,
            node_max: 4.2,
            node_count: 169,
            quantile_count: 10_000,
            scan_min: -4.0,
            scan_max: 4.0,
            scan_count: 21,
            ode_tol: 1e-6,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridCfg {
    pub t_min: f64,
    pub t_max: f64,
    pub t_count: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub x_count: usize,
}

impl Default for GridCfg {
    fn default() -> Self {
        Self { t_min: 0.05, t_max: 5.0, t_count: 20, x_min: -8.0, x_max: 8.0, x_count: 41 }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SphereCfg {
    /// Height-function coefficient of the sphere perturbation.
    pub a: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub t_count: usize,
    /// Polar angles scanned on [margin, π − margin].
    pub theta_margin: f64,
    pub theta_count: usize,
}

impl Default for SphereCfg {
    fn default() -> Self {
        Self { a: 1.0, t_min: 0.05, t_max: 3.0, t_count: 20, theta_margin: 0.2, theta_count: 41 }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TailCfg {
    pub t: f64,
    pub dt: f64,
    pub n_sims: usize,
    pub deltas: Vec<f64>,
}

impl Default for TailCfg {
    fn default() -> Self {
        Self { t: 1.0, dt: 1e-3, n_sims: 100_000, deltas: vec![0.5, 1.0, 2.0] }
    }
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading config {}", p.display()))?;
                toml::from_str(&text).with_context(|| format!("parsing config {}", p.display()))?
            }
            None => Config::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if !(self.measure.kappa > 0.0) {
            bail!("measure.kappa must be > 0, got {}", self.measure.kappa);
        }
        if self.measure.lambda < 0.0 || self.measure.lambda >= self.measure.kappa {
            bail!("measure.lambda must lie in [0, kappa), got {}", self.measure.lambda);
        }
        match self.perturbation.family.as_str() {
            "zero" | "linear" | "abs" | "smoothed-abs" => {}
            other => bail!("perturbation.family must be zero|linear|abs|smoothed-abs, got {other:?}"),
        }
        if self.perturbation.family == "smoothed-abs" && !(self.perturbation.eps > 0.0) {
            bail!("perturbation.eps must be > 0 for smoothed-abs");
        }
        if self.mc.n_paths == 0 || !(self.mc.dt > 0.0) {
            bail!("mc.n_paths must be >= 1 and mc.dt > 0");
        }
        if !(self.flow.tau > 0.0) || self.flow.n_steps == 0 {
            bail!("flow.tau must be > 0 and flow.n_steps >= 1");
        }
        if self.flow.node_count < 2 || self.flow.quantile_count < 2 || self.flow.scan_count < 2 {
            bail!("flow grids need at least 2 points");
        }
        if !(self.flow.node_min < self.flow.node_max) || !(self.flow.scan_min < self.flow.scan_max)
        {
            bail!("flow grid endpoints must be increasing");
        }
        for (name, g) in [
            ("grid.t", (self.grid.t_min, self.grid.t_max, self.grid.t_count)),
            ("grid.x", (self.grid.x_min, self.grid.x_max, self.grid.x_count)),
            ("sphere.t", (self.sphere.t_min, self.sphere.t_max, self.sphere.t_count)),
        ] {
            if !(g.0 < g.1) || g.2 < 2 {
                bail!("{name} range must be increasing with at least 2 points");
            }
        }
        if !(self.grid.t_min > 0.0) || !(self.sphere.t_min > 0.0) {
            bail!("time grids must start above 0");
        }
        if !(self.sphere.theta_margin > 0.0)
            || self.sphere.theta_margin >= std::f64::consts::FRAC_PI_2
            || self.sphere.theta_count < 2
        {
            bail!("sphere.theta_margin must lie in (0, π/2) with at least 2 angles");
        }
        if self.tail.n_sims == 0 || !(self.tail.dt > 0.0) || !(self.tail.t > 0.0) {
            bail!("tail.n_sims must be >= 1, tail.dt > 0, tail.t > 0");
        }
        if self.tail.deltas.is_empty() || self.tail.deltas.iter().any(|d| !(*d > 0.0)) {
            bail!("tail.deltas must be nonempty and positive");
        }
        Ok(())
    }

    /// The Lipschitz constant of the configured perturbation.
    pub fn lip(&self) -> f64 {
        self.perturbation.coeff.abs()
    }
}
