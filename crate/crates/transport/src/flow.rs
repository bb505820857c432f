//! Transport maps built by integrating the interpolation velocity field
//! v(t, y) = −∇ log P_t e^{−W}(y).
//!
//! The forward flow map S runs time 0 → τ and spreads μ out; the inverse map
//! T runs τ → 0 and transports μ to ν = e^{−W} dμ / Z up to a truncation
//! error that decays like e^{−κτ}. The state's Jacobian rides along the same
//! Runge-Kutta stages via J' = −(∇² log P_t e^{−W}) J, so every map
//! evaluation also yields a certified local stretch factor.

use crate::geometry::Space;
use crate::linalg::{norm, SquareMat};
use crate::measures::{Perturbation, SourceMeasure};
use crate::oracle::{Oracle1D, SphereOracle};
use crate::rng::{mix_seed, par_indexed_map};
use crate::semigroup::{est_hess_log_pt_euclidean, McConfig};
use crate::special::norm_ppf;
use crate::stats::ks_threshold_one_sample;
use crate::{Error, Result};

/// Default truncation time for the flow: the remaining drift after τ = 8 is
/// bounded by L e^{−κτ}/κ ≈ 3.4e−4 · L/κ at κ = 1.
pub const DEFAULT_TAU: f64 = 8.0;
/// Default number of graded Runge-Kutta steps.
pub const DEFAULT_FLOW_STEPS: usize = 800;
/// A single Runge-Kutta step may move the state at most this far; larger
/// moves indicate an under-resolved grid and abort the integration.
pub const MAX_FLOW_STEP: f64 = 0.5;

/// Velocity-field oracle: where −∇ log P_t e^{−W} and its spatial Jacobian
/// come from.
pub enum VelocityBackend {
    /// Quadrature semigroup on the line; deterministic to the oracle
    /// tolerance.
    Oracle1D(Oracle1D),
    /// Spectral semigroup on the 2-sphere for axisymmetric data; the state is
    /// the single polar coordinate θ ∈ (0, π).
    SphereAxisymmetric(SphereOracle),
    /// Path-sampled velocities (one dimension only). Each (t, y) evaluation
    /// is seeded from the quantized coordinates so the field is a
    /// deterministic function and the integration is reproducible.
    MonteCarlo { m: SourceMeasure, w: Perturbation, cfg: McConfig },
}

/// 2^26-resolution quantizer used to derive deterministic per-point seeds.
fn quantize(v: f64) -> u64 {
    ((v * (1u64 << 26) as f64).round() as i64) as u64
}

impl VelocityBackend {
    /// Dimension of the flow state.
    pub fn dim(&self) -> usize {
        match self {
            VelocityBackend::Oracle1D(_) => 1,
            VelocityBackend::SphereAxisymmetric(_) => 1,
            VelocityBackend::MonteCarlo { m, .. } => m.space.ambient_dim(),
        }
    }

    /// Velocity −∇ log P_t e^{−W}(y) together with ∇² log P_t e^{−W}(y).
    pub fn eval(&self, t: f64, y: &[f64]) -> Result<(Vec<f64>, SquareMat)> {
        let d = self.dim();
        if y.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: y.len() });
        }
        match self {
            VelocityBackend::Oracle1D(o) => {
                let (g, h) = o.log_derivs(t, y[0])?;
                let mut mat = SquareMat::zeros(1);
                *mat.at_mut(0, 0) = h;
                Ok((vec![-g], mat))
            }
            VelocityBackend::SphereAxisymmetric(o) => {
                let g = o.spectral_grad_log(t, y[0]);
                let h = o.spectral_hess_log(t, y[0]);
                if !g.is_finite() || !h.is_finite() {
                    return Err(Error::NonFinite { context: "sphere velocity", quantity: g });
                }
                let mut mat = SquareMat::zeros(1);
                *mat.at_mut(0, 0) = h;
                Ok((vec![-g], mat))
            }
            VelocityBackend::MonteCarlo { m, w, cfg } => {
                if m.space.is_sphere() || d != 1 {
                    return Err(Error::InvalidParameter {
                        name: "backend",
                        message: "sampled velocities are implemented on the line only".into(),
                    });
                }
                if t == 0.0 {
                    // P_0 e^{−W} = e^{−W} exactly.
                    let (_, w1, w2) = w.scalar_derivs(y[0]);
                    let mut mat = SquareMat::zeros(1);
                    *mat.at_mut(0, 0) = -w2;
                    return Ok((vec![w1], mat));
                }
                let mut local = cfg.clone();
                local.seed = mix_seed(cfg.seed, &[quantize(t), quantize(y[0])]);
                let est = est_hess_log_pt_euclidean(m, w, y, &[1.0], t, &local)?;
                let mut mat = SquareMat::zeros(1);
                *mat.at_mut(0, 0) = est.hess_log;
                Ok((vec![-est.grad_log], mat))
            }
        }
    }
}

/// Which way the flow is traversed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowDirection {
    /// 0 → τ: the spreading map S.
    Forward,
    /// τ → 0: the transport map T = S⁻¹ with T#μ ≈ ν.
    Inverse,
}

/// Endpoint of a flow integration.
#[derive(Debug, Clone)]
pub struct FlowResult {
    pub point: Vec<f64>,
    /// Jacobian of the map at the starting point.
    pub jac: SquareMat,
}

/// Quadratically graded time grid t_i = τ (i/n)²: step sizes shrink toward
/// t = 0 where the velocity field is least regular.
pub fn graded_grid(tau: f64, n_steps: usize) -> Vec<f64> {
    let n = n_steps as f64;
    (0..=n_steps).map(|i| tau * (i as f64 / n) * (i as f64 / n)).collect()
}

/// One classical Runge-Kutta step of the augmented system (y, J) from time t
/// with signed increment h.
fn rk4_step(
    backend: &VelocityBackend,
    t: f64,
    h: f64,
    y: &mut Vec<f64>,
    j: &mut SquareMat,
) -> Result<()> {
    let d = y.len();
    let jdot = |mat: &SquareMat, jj: &SquareMat| -> SquareMat {
        let mut out = mat.matmul(jj);
        for v in out.data.iter_mut() {
            *v = -*v;
        }
        out
    };
    let advance = |base: &[f64], k: &[f64], s: f64| -> Vec<f64> {
        base.iter().zip(k).map(|(b, kv)| b + s * kv).collect()
    };
    let madvance = |base: &SquareMat, k: &SquareMat, s: f64| -> SquareMat {
        let mut out = base.clone();
        for (o, kv) in out.data.iter_mut().zip(k.data.iter()) {
            *o += s * kv;
        }
        out
    };

    let (k1v, k1m) = backend.eval(t, y)?;
    let k1j = jdot(&k1m, j);
    let y1 = advance(y, &k1v, 0.5 * h);
    let j1 = madvance(j, &k1j, 0.5 * h);

    let (k2v, k2m) = backend.eval(t + 0.5 * h, &y1)?;
    let k2j = jdot(&k2m, &j1);
    let y2 = advance(y, &k2v, 0.5 * h);
    let j2 = madvance(j, &k2j, 0.5 * h);

    let (k3v, k3m) = backend.eval(t + 0.5 * h, &y2)?;
    let k3j = jdot(&k3m, &j2);
    let y3 = advance(y, &k3v, h);
    let j3 = madvance(j, &k3j, h);

    let (k4v, k4m) = backend.eval(t + h, &y3)?;
    let k4j = jdot(&k4m, &j3);

    let mut dy = vec![0.0; d];
    for i in 0..d {
        dy[i] = (h / 6.0) * (k1v[i] + 2.0 * k2v[i] + 2.0 * k3v[i] + k4v[i]);
    }
    let step_len = norm(&dy);
    if !step_len.is_finite() {
        return Err(Error::NonFinite { context: "flow step", quantity: step_len });
    }
    if step_len > MAX_FLOW_STEP {
        return Err(Error::StepTooLarge(format!(
            "flow step of length {step_len:.3} at t = {t:.4} exceeds {MAX_FLOW_STEP}; refine the grid"
        )));
    }
    for i in 0..d {
        y[i] += dy[i];
    }
    for idx in 0..j.data.len() {
        j.data[idx] += (h / 6.0)
            * (k1j.data[idx] + 2.0 * k2j.data[idx] + 2.0 * k3j.data[idx] + k4j.data[idx]);
    }
    Ok(())
}

/// Integrate the flow from x over the graded grid in the given direction.
pub fn flow_map(
    backend: &VelocityBackend,
    x: &[f64],
    tau: f64,
    n_steps: usize,
    direction: FlowDirection,
) -> Result<FlowResult> {
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter {
            name: "tau",
            message: format!("truncation time must be positive, got {tau}"),
        });
    }
    if n_steps == 0 {
        return Err(Error::InvalidParameter {
            name: "n_steps",
            message: "need at least one step".into(),
        });
    }
    let d = backend.dim();
    if x.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: x.len() });
    }
    let grid = graded_grid(tau, n_steps);
    let mut y = x.to_vec();
    let mut j = SquareMat::identity(d);
    match direction {
        FlowDirection::Forward => {
            for i in 0..n_steps {
                rk4_step(backend, grid[i], grid[i + 1] - grid[i], &mut y, &mut j)?;
            }
        }
        FlowDirection::Inverse => {
            for i in (0..n_steps).rev() {
                rk4_step(backend, grid[i + 1], grid[i] - grid[i + 1], &mut y, &mut j)?;
            }
        }
    }
    for &v in y.iter() {
        if !v.is_finite() {
            return Err(Error::NonFinite { context: "flow endpoint", quantity: v });
        }
    }
    Ok(FlowResult { point: y, jac: j })
}

/// The spreading map S (flow 0 → τ).
pub fn forward_map(
    backend: &VelocityBackend,
    x: &[f64],
    tau: f64,
    n_steps: usize,
) -> Result<FlowResult> {
    flow_map(backend, x, tau, n_steps, FlowDirection::Forward)
}

/// The transport map T = S⁻¹ (flow τ → 0); T#μ → ν as τ → ∞.
pub fn inverse_map(
    backend: &VelocityBackend,
    x: &[f64],
    tau: f64,
    n_steps: usize,
) -> Result<FlowResult> {
    flow_map(backend, x, tau, n_steps, FlowDirection::Inverse)
}

/// Map a batch of points in parallel (deterministic: one task per input).
pub fn flow_map_batch(
    backend: &VelocityBackend,
    xs: &[Vec<f64>],
    tau: f64,
    n_steps: usize,
    direction: FlowDirection,
) -> Result<Vec<FlowResult>> {
    par_indexed_map(xs.len(), |i| flow_map(backend, &xs[i], tau, n_steps, direction))
        .into_iter()
        .collect()
}

/// Remaining movement of the transport map after truncating the flow at τ:
/// sup |T − T_τ| ≤ L e^{−κτ}/κ.
pub fn time_truncation_bound(l: f64, kappa: f64, tau: f64) -> f64 {
    l * (-kappa * tau).exp() / kappa
}

/// Largest observed stretch over a batch of flow results: the maximum of the
/// Jacobian operator norms and of the pairwise image/input distance ratios.
pub fn empirical_lipschitz(space: &Space, inputs: &[Vec<f64>], results: &[FlowResult]) -> f64 {
    assert_eq!(inputs.len(), results.len());
    let mut lip = 0.0f64;
    for r in results {
        lip = lip.max(r.jac.op_norm());
    }
    for i in 0..inputs.len() {
        for k in (i + 1)..inputs.len() {
            let dx = space.geodesic_distance(&inputs[i], &inputs[k]);
            if dx < 1e-9 {
                continue;
            }
            let dy = space.geodesic_distance(&results[i].point, &results[k].point);
            lip = lip.max(dy / dx);
        }
    }
    lip
}

/// Azimuthal stretch of an axisymmetric sphere map sending the meridian
/// coordinate θ_start to θ_end.
pub fn sphere_azimuthal_stretch(theta_start: f64, theta_end: f64) -> f64 {
    theta_end.sin() / theta_start.sin()
}

/// Kolmogorov-Smirnov distance between the image of an exact μ-quantile grid
/// under `map` and the quadrature law of ν. A perfect map scores 1/(2n).
pub fn pushforward_ks_quantile_grid(
    oracle: &Oracle1D,
    map: &(dyn Fn(f64) -> Result<f64> + Sync),
    n: usize,
) -> Result<f64> {
    assert!(n >= 2);
    let sk = oracle.kappa.sqrt();
    let ys: Result<Vec<f64>> =
        par_indexed_map(n, |i| map(norm_ppf((i as f64 + 0.5) / n as f64) / sk))
            .into_iter()
            .collect();
    let mut ys = ys?;
    ys.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ks_against_nu(oracle, &ys)
}

/// One-sample Kolmogorov-Smirnov check of map#μ against ν using `n` points
/// sampled from the source. Returns (statistic, level-α threshold).
pub fn pushforward_ks_random(
    oracle: &Oracle1D,
    m: &SourceMeasure,
    map: &(dyn Fn(f64) -> Result<f64> + Sync),
    n: usize,
    seed: u64,
    alpha: f64,
) -> Result<(f64, f64)> {
    let batch = m.sample_source(n, seed)?;
    let ys: Result<Vec<f64>> =
        par_indexed_map(n, |i| map(batch.points[i][0])).into_iter().collect();
    let mut ys = ys?;
    ys.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok((ks_against_nu(oracle, &ys)?, ks_threshold_one_sample(alpha, n)))
}

fn ks_against_nu(oracle: &Oracle1D, sorted_ys: &[f64]) -> Result<f64> {
    let n = sorted_ys.len();
    let fs: Result<Vec<f64>> =
        par_indexed_map(n, |i| oracle.cdf_nu(sorted_ys[i])).into_iter().collect();
    let fs = fs?;
    let nf = n as f64;
    let mut d = 0.0f64;
    for (i, &f) in fs.iter().enumerate() {
        d = d.max(f - i as f64 / nf).max((i + 1) as f64 / nf - f);
    }
    Ok(d)
}
