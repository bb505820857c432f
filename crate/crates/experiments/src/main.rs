//! Command-line checks over the transport library: each subcommand runs one
//! verification experiment, writes report.csv and summary.json (plus map.csv
//! or oracle.csv where noted), and exits 0 when every row passes, 1 when a
//! check fails, 2 on configuration or runtime errors.

mod config;
mod report;

use anyhow::{bail, Result};
use clap::{Parser, Subcommand};
use std::path::PathBuf;
use transport::bounds::{
    integrate_theta, sharpness_lower_bound, theta_euclidean, ConstantForm, Setting,
};
use transport::flow::{
    empirical_lipschitz, flow_map_batch, forward_map, inverse_map, pushforward_ks_quantile_grid,
    FlowDirection, VelocityBackend,
};
use transport::geometry::Space;
use transport::measures::Perturbation;
use transport::oracle::{Oracle1D, SphereOracle};
use transport::semigroup::martingale_tail_sim;

use config::Config;
use report::{write_table, Report, Row};

#[derive(Parser)]
#[command(name = "experiments", version, about = "Transport-map verification experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// TOML experiment configuration (defaults applied when omitted).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seed from the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Caps the worker-thread count; never changes results.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory for report.csv and friends.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Certify ∇² log P_t e^{−W} ≤ θ_t on a (t, x) grid by exact quadrature.
    HessianCheck,
    /// Empirical stretch of both flow directions against the certified constants.
    LipschitzCheck,
    /// Inverse flow vs monotone rearrangement, plus the pushforward distance.
    PushforwardCheck,
    /// Largest rearrangement derivative for the two-sided-exponential target.
    Sharpness,
    /// Round-trip accuracy of forward ∘ inverse flow and their Jacobians.
    InverseCheck,
    /// Sub-Gaussian tail of the exponentially damped martingale.
    MartingaleTail,
    /// Reverse Hölder margins on the line and the sphere.
    ReverseHolder,
    /// All closed-form constants plus profile-integral consistency checks.
    BoundsTable,
}

fn main() {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match run(&cli) {
        Ok(true) => std::process::exit(0),
        Ok(false) => std::process::exit(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(2);
        }
    }
}

fn run(cli: &Cli) -> Result<bool> {
    let cfg = Config::load(cli.config.as_deref())?;
    let Some(seed) = cli.seed.or(cfg.seed) else {
        bail!("seed is mandatory: set `seed` in the config file or pass --seed");
    };
    let report = match cli.cmd {
        Cmd::HessianCheck => hessian_check(&cfg, seed, &cli.out)?,
        Cmd::LipschitzCheck => lipschitz_check(&cfg, seed)?,
        Cmd::PushforwardCheck => pushforward_check(&cfg, seed, &cli.out)?,
        Cmd::Sharpness => sharpness(&cfg, seed)?,
        Cmd::InverseCheck => inverse_check(&cfg, seed)?,
        Cmd::MartingaleTail => martingale_tail(&cfg, seed)?,
        Cmd::ReverseHolder => reverse_holder(&cfg, seed)?,
        Cmd::BoundsTable => bounds_table(&cfg, seed)?,
    };
    let pass = report.write(&cli.out)?;
    let failed = report.rows.iter().filter(|r| !r.pass).count();
    println!(
        "{}: {} rows, {} failed -> {} (reports in {})",
        report.experiment,
        report.rows.len(),
        failed,
        if pass { "PASS" } else { "FAIL" },
        cli.out.display()
    );
    Ok(pass)
}

// ---------------------------------------------------------------------------
// Shared construction
// ---------------------------------------------------------------------------

fn perturbation_1d(cfg: &Config) -> Result<Perturbation> {
    let sp = Space::euclidean(1)?;
    Ok(match cfg.perturbation.family.as_str() {
        "zero" => Perturbation::zero(sp),
        "linear" => Perturbation::linear(sp, vec![cfg.perturbation.coeff])?,
        "abs" => Perturbation::abs(sp, cfg.perturbation.coeff),
        "smoothed-abs" => {
            Perturbation::smoothed_abs(sp, cfg.perturbation.coeff, cfg.perturbation.eps)?
        }
        other => bail!("unknown perturbation family {other:?}"),
    })
}

fn require_gaussian(cfg: &Config, what: &str) -> Result<()> {
    if cfg.measure.lambda != 0.0 {
        bail!("{what} uses the exact 1D oracle, which needs measure.lambda = 0");
    }
    Ok(())
}

fn oracle_1d(cfg: &Config, tol: Option<f64>) -> Result<Oracle1D> {
    let w = perturbation_1d(cfg)?;
    Ok(match tol {
        Some(tol) => Oracle1D::with_tol(cfg.measure.kappa, w, tol)?,
        None => Oracle1D::new(cfg.measure.kappa, w)?,
    })
}

fn log_spaced(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a * (b / a).powf(i as f64 / (n - 1) as f64)).collect()
}

fn uniform(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

fn lin_interp(xs: &[f64], ys: &[f64], q: f64) -> f64 {
    let n = xs.len();
    if q <= xs[0] {
        return ys[0];
    }
    if q >= xs[n - 1] {
        return ys[n - 1];
    }
    let i = xs.partition_point(|&v| v <= q).min(n - 1);
    let w = (q - xs[i - 1]) / (xs[i] - xs[i - 1]);
    ys[i - 1] * (1.0 - w) + ys[i] * w
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

fn hessian_check(cfg: &Config, seed: u64, out: &PathBuf) -> Result<Report> {
    require_gaussian(cfg, "hessian-check")?;
    let oracle = oracle_1d(cfg, None)?;
    let mut rep = Report::new("hessian-check", seed);
    let mut table = Vec::new();
    for t in log_spaced(cfg.grid.t_min, cfg.grid.t_max, cfg.grid.t_count) {
        let envelope = theta_euclidean(t, cfg.lip(), cfg.measure.kappa, 0.0);
        for x in uniform(cfg.grid.x_min, cfg.grid.x_max, cfg.grid.x_count) {
            let h = oracle.quad_hess_log_pt(t, x)?;
            rep.push(Row::upper("hessian-envelope", Some(t), Some(x), h, envelope + 1e-9));
            table.push(vec![t, x, h, envelope]);
        }
    }
    write_table(out, "oracle.csv", &["t", "x", "hess_log", "envelope"], &table)?;
    Ok(rep)
}

fn lipschitz_check(cfg: &Config, seed: u64) -> Result<Report> {
    require_gaussian(cfg, "lipschitz-check")?;
    let backend = VelocityBackend::Oracle1D(oracle_1d(cfg, Some(cfg.flow.oracle_tol))?);
    let sp = Space::euclidean(1)?;
    let inputs: Vec<Vec<f64>> = uniform(cfg.flow.scan_min, cfg.flow.scan_max, cfg.flow.scan_count)
        .into_iter()
        .map(|x| vec![x])
        .collect();
    let t_batch =
        flow_map_batch(&backend, &inputs, cfg.flow.tau, cfg.flow.n_steps, FlowDirection::Inverse)?;
    let s_batch =
        flow_map_batch(&backend, &inputs, cfg.flow.tau, cfg.flow.n_steps, FlowDirection::Forward)?;
    let setting = Setting::Euclidean { l: cfg.lip(), kappa: cfg.measure.kappa, k3: 0.0 };
    let mut rep = Report::new("lipschitz-check", seed);
    rep.push(Row::upper(
        "lipschitz-inverse-map",
        None,
        None,
        empirical_lipschitz(&sp, &inputs, &t_batch),
        setting.lip_const(ConstantForm::Tight),
    ));
    rep.push(Row::upper(
        "lipschitz-forward-map",
        None,
        None,
        empirical_lipschitz(&sp, &inputs, &s_batch),
        setting.inverse_lip_const(),
    ));
    Ok(rep)
}

fn pushforward_check(cfg: &Config, seed: u64, out: &PathBuf) -> Result<Report> {
    require_gaussian(cfg, "pushforward-check")?;
    let backend = VelocityBackend::Oracle1D(oracle_1d(cfg, Some(cfg.flow.oracle_tol))?);
    let cmp = oracle_1d(cfg, None)?;
    let nodes = uniform(cfg.flow.node_min, cfg.flow.node_max, cfg.flow.node_count);
    let inputs: Vec<Vec<f64>> = nodes.iter().map(|&x| vec![x]).collect();
    let results =
        flow_map_batch(&backend, &inputs, cfg.flow.tau, cfg.flow.n_steps, FlowDirection::Inverse)?;
    let images: Vec<f64> = results.iter().map(|r| r.point[0]).collect();
    let mut rep = Report::new("pushforward-check", seed);
    let mut table = Vec::new();
    for (&x, &y) in nodes.iter().zip(&images) {
        if x < cfg.flow.scan_min || x > cfg.flow.scan_max {
            continue;
        }
        let exact = cmp.monotone_map(x)?;
        table.push(vec![x, y, exact]);
        rep.push(Row::upper("flow-vs-rearrangement", None, Some(x), (y - exact).abs(), 1e-2));
    }
    let map = |q: f64| -> transport::Result<f64> { Ok(lin_interp(&nodes, &images, q)) };
    let ks = pushforward_ks_quantile_grid(&cmp, &map, cfg.flow.quantile_count)?;
    rep.push(Row::upper("pushforward-ks", None, None, ks, 1e-3));
    write_table(out, "map.csv", &["x", "flow_image", "rearrangement"], &table)?;
    Ok(rep)
}

fn sharpness(cfg: &Config, seed: u64) -> Result<Report> {
    require_gaussian(cfg, "sharpness")?;
    let sp = Space::euclidean(1)?;
    // spreading target: the negative-coefficient two-sided exponential
    let w = Perturbation::abs(sp, -cfg.lip());
    let oracle = Oracle1D::new(cfg.measure.kappa, w)?;
    let mut rep = Report::new("sharpness", seed);
    let mut sup = f64::NEG_INFINITY;
    for x in uniform(cfg.flow.scan_min, cfg.flow.scan_max, cfg.flow.scan_count) {
        let d = oracle.monotone_map_deriv(x)?;
        sup = sup.max(d);
        rep.push(Row::info("sharpness-scan", None, Some(x), d));
    }
    let floor = sharpness_lower_bound(cfg.lip()) * (1.0 - 1e-2);
    rep.push(Row::lower("sharpness-sup", None, None, sup, floor));
    Ok(rep)
}

fn inverse_check(cfg: &Config, seed: u64) -> Result<Report> {
    require_gaussian(cfg, "inverse-check")?;
    let backend = VelocityBackend::Oracle1D(oracle_1d(cfg, Some(cfg.flow.oracle_tol))?);
    let tol = 10.0 * cfg.flow.ode_tol;
    let mut rep = Report::new("inverse-check", seed);
    for x in uniform(cfg.flow.scan_min, cfg.flow.scan_max, cfg.flow.scan_count) {
        let fwd = inverse_map(&backend, &[x], cfg.flow.tau, cfg.flow.n_steps)?;
        let back = forward_map(&backend, &fwd.point, cfg.flow.tau, cfg.flow.n_steps)?;
        rep.push(Row::upper("roundtrip-point", None, Some(x), (back.point[0] - x).abs(), tol));
        let jac_prod = back.jac.at(0, 0) * fwd.jac.at(0, 0);
        rep.push(Row::upper("roundtrip-jacobian", None, Some(x), (jac_prod - 1.0).abs(), tol));
    }
    Ok(rep)
}

fn martingale_tail(cfg: &Config, seed: u64) -> Result<Report> {
    let points = martingale_tail_sim(
        cfg.measure.kappa,
        cfg.tail.t,
        cfg.tail.dt,
        cfg.tail.n_sims,
        &cfg.tail.deltas,
        seed,
    )?;
    let mut rep = Report::new("martingale-tail", seed);
    for p in points {
        rep.push(Row::upper(
            "martingale-tail",
            Some(cfg.tail.t),
            Some(p.delta),
            p.p_hat,
            p.bound + p.margin_99,
        ));
    }
    Ok(rep)
}

fn reverse_holder(cfg: &Config, seed: u64) -> Result<Report> {
    require_gaussian(cfg, "reverse-holder")?;
    let line = oracle_1d(cfg, None)?;
    let mut rep = Report::new("reverse-holder", seed);
    for t in log_spaced(cfg.grid.t_min, cfg.grid.t_max, cfg.grid.t_count) {
        for x in uniform(cfg.grid.x_min, cfg.grid.x_max, cfg.grid.x_count) {
            rep.push(Row::lower(
                "reverse-holder-line",
                Some(t),
                Some(x),
                line.reverse_holder_margin(t, x)?,
                -1e-10,
            ));
        }
    }
    let sphere = SphereOracle::new(cfg.sphere.a)?;
    let th_max = std::f64::consts::PI - cfg.sphere.theta_margin;
    for t in log_spaced(cfg.sphere.t_min, cfg.sphere.t_max, cfg.sphere.t_count) {
        for theta in uniform(cfg.sphere.theta_margin, th_max, cfg.sphere.theta_count) {
            rep.push(Row::lower(
                "reverse-holder-sphere",
                Some(t),
                Some(theta),
                sphere.reverse_holder_margin(t, theta)?,
                -1e-10,
            ));
        }
    }
    Ok(rep)
}

fn bounds_table(cfg: &Config, seed: u64) -> Result<Report> {
    let l = cfg.lip();
    let euclid = Setting::Euclidean { l, kappa: cfg.measure.kappa, k3: cfg.measure.lambda };
    let sphere = Setting::Sphere { l: cfg.sphere.a.abs(), ambient_dim: 3 };
    let mut rep = Report::new("bounds-table", seed);
    for (name_t, name_s, name_i, s) in [
        ("euclid-tight", "euclid-stated", "euclid-inverse", euclid),
        ("sphere-tight", "sphere-stated", "sphere-inverse", sphere),
    ] {
        let tight = s.lip_const(ConstantForm::Tight);
        let stated = s.lip_const(ConstantForm::Stated);
        rep.push(Row::info(name_t, None, None, tight));
        rep.push(Row::info(name_s, None, None, stated));
        rep.push(Row::info(name_i, None, None, s.inverse_lip_const()));
        rep.push(Row::upper("tight-below-stated", None, None, tight, stated));
        let integral = integrate_theta(&s, 1e-9)?;
        let rel = (integral / tight.ln() - 1.0).abs();
        rep.push(Row::upper("theta-integral-consistency", None, None, rel, 1e-6));
    }
    rep.push(Row::info("sharpness-bound", None, None, sharpness_lower_bound(l)));
    Ok(rep)
}
