//! Monte Carlo estimators for P_t e^{−W} and its log-derivatives, built on
//! Euler–Maruyama paths of dX = −∇V dt + √2 dω (Euclidean) and geodesic
//! random walks with parallel-transported frames (sphere).
//!
//! Second derivatives avoid differentiating the heat kernel: they use path
//! representations driven by the first and second variation flows
//!   d(∇X)/dt = −∇²V(X)·∇X,      ∇X₀ = I,
//!   d(∇²X)/dt = −∇³V(X)(∇X·u, ∇X·v) − ∇²V(X)·∇²X,   ∇²X₀ = 0,
//! and the martingale M_t = ∫₀ᵗ ⟨∇X_s u, dω_s⟩. All estimators are
//! deterministic for a fixed seed: path i draws from substream(seed, i) and
//! reductions are sequential compensated sums.

use crate::geometry::Space;
use crate::linalg::{dot, norm, SquareMat};
use crate::measures::{Perturbation, SourceMeasure};
use crate::rng::{fill_normals, par_indexed_map, substream};
use crate::stats::{hess_log_se, mean_se, neumaier_sum, ratio_se};
use crate::{Error, Result};
use rand_chacha::ChaCha8Rng;

/// Slack added to per-path contraction bounds on |∇X| and |∇²X| to absorb
/// the explicit Euler discretization error.
pub const PATH_BOUND_SLACK_STEPS: f64 = 10.0;
/// A denominator mean below this many standard errors is too noisy to
/// divide by.
pub const MIN_DENOMINATOR_SIGMAS: f64 = 10.0;
/// Single sphere steps at or beyond this geodesic length abort the run.
pub const MAX_SPHERE_STEP: f64 = std::f64::consts::FRAC_PI_4;

#[derive(Debug, Clone, Copy)]
pub struct McConfig {
    pub n_paths: usize,
    pub dt: f64,
    pub seed: u64,
    /// Track ∇²X even when ∇³V ≡ 0 (it then stays exactly zero).
    pub track_second_variation: bool,
}

impl McConfig {
    pub fn new(n_paths: usize, dt: f64, seed: u64) -> Self {
        Self { n_paths, dt, seed, track_second_variation: false }
    }

    fn validate(&self) -> Result<()> {
        if self.n_paths == 0 {
            return Err(Error::InvalidParameter { name: "n_paths", message: ">= 1".into() });
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter { name: "dt", message: "> 0".into() });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SemigroupEstimate {
    pub value: f64,
    pub std_error: f64,
}

/// Aggregated per-path invariants.
#[derive(Debug, Clone, Copy, Default)]
pub struct PathDiagnostics {
    /// max over paths and steps of |∇X·u| − (e^{−κ_eff s} + 10·dt)
    pub max_j_excess: f64,
    /// max over paths and steps of |∇²X| − (K s e^{−κ_eff s} + 10·dt)
    pub max_h_excess: f64,
    /// E[M_t⁴] and E[⟨M⟩_t²] for the fourth-moment diagnostic
    pub mart_fourth_moment: f64,
    pub qv_second_moment: f64,
}

#[derive(Debug, Clone)]
pub struct HessEstimate {
    pub hess_log: f64,
    pub hess_log_se: f64,
    pub grad_log: f64,
    pub grad_log_se: f64,
    pub p: f64,
    pub p_se: f64,
    /// Bismut martingale term divided by P_t e^{−W}.
    pub term1_over_p: f64,
    pub term1_se: f64,
    /// Second-variation term divided by P_t e^{−W}.
    pub term2_over_p: f64,
    pub term2_se: f64,
    pub diagnostics: PathDiagnostics,
}

/// One Euclidean path's state.
pub struct EuclideanPath {
    pub x: Vec<f64>,
    /// ∇X_t · u
    pub ju: Vec<f64>,
    /// full ∇X_t (kept only when the second variation is tracked)
    pub j: Option<SquareMat>,
    /// ∇²_{u,u}X_t
    pub h: Option<Vec<f64>>,
    /// ∫₀ᵗ (∇X_s)⁻¹ ∇²X_s ds (trapezoid)
    pub a: Option<Vec<f64>>,
    prev_jinv_h: Option<Vec<f64>>,
    pub mart: f64,
    pub qv: f64,
    pub s: f64,
    pub max_j_excess: f64,
    pub max_h_excess: f64,
    grad: Vec<f64>,
    xi: Vec<f64>,
    buf: Vec<f64>,
    col: Vec<f64>,
}

impl EuclideanPath {
    pub fn new(x0: &[f64], u: &[f64], track_h: bool) -> Self {
        let d = x0.len();
        Self {
            x: x0.to_vec(),
            ju: u.to_vec(),
            j: track_h.then(|| SquareMat::identity(d)),
            h: track_h.then(|| vec![0.0; d]),
            a: track_h.then(|| vec![0.0; d]),
            prev_jinv_h: track_h.then(|| vec![0.0; d]),
            mart: 0.0,
            qv: 0.0,
            s: 0.0,
            max_j_excess: f64::NEG_INFINITY,
            max_h_excess: f64::NEG_INFINITY,
            grad: vec![0.0; d],
            xi: vec![0.0; d],
            buf: vec![0.0; d],
            col: vec![0.0; d],
        }
    }
}

/// One explicit Euler–Maruyama step; all flow right-hand sides are
/// evaluated at the pre-step state.
pub fn step_euclidean(
    m: &SourceMeasure,
    p: &mut EuclideanPath,
    dt: f64,
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    let d = p.x.len();
    let sdt = dt.sqrt();
    fill_normals(rng, &mut p.xi);

    // martingale pieces use the left endpoint (Itô)
    p.mart += dot(&p.ju, &p.xi) * sdt;
    p.qv += dot(&p.ju, &p.ju) * dt;

    // second variation first: it reads the pre-step ju and j
    if let (Some(j), Some(h), Some(a), Some(prev)) =
        (p.j.as_mut(), p.h.as_mut(), p.a.as_mut(), p.prev_jinv_h.as_mut())
    {
        // H += (−∇³V(Ju, Ju) − ∇²V·H) dt
        m.third_apply(&p.x, &p.ju, &p.ju, &mut p.buf);
        m.hess_apply(&p.x, h, &mut p.grad);
        for i in 0..d {
            h[i] -= (p.buf[i] + p.grad[i]) * dt;
        }
        // J column-wise: col −= ∇²V·col dt
        for c in 0..d {
            for r in 0..d {
                p.col[r] = j.at(r, c);
            }
            m.hess_apply(&p.x, &p.col, &mut p.buf);
            for r in 0..d {
                *j.at_mut(r, c) -= p.buf[r] * dt;
            }
        }
        // trapezoid accumulation of ∫ J⁻¹H ds at the post-step time
        let cur = j
            .solve(h)
            .ok_or_else(|| Error::NonFinite { context: "singular variation flow", quantity: 0.0 })?;
        for i in 0..d {
            a[i] += 0.5 * (prev[i] + cur[i]) * dt;
            prev[i] = cur[i];
        }
    }

    // Ju += −∇²V·Ju dt
    m.hess_apply(&p.x, &p.ju, &mut p.buf);
    for i in 0..d {
        p.ju[i] -= p.buf[i] * dt;
    }

    // X += −∇V dt + √(2dt) ξ
    m.grad(&p.x, &mut p.grad);
    let noise = (2.0 * dt).sqrt();
    for i in 0..d {
        p.x[i] += -p.grad[i] * dt + noise * p.xi[i];
    }

    p.s += dt;
    let kappa = m.curvature_kappa();
    let slack = PATH_BOUND_SLACK_STEPS * dt;
    p.max_j_excess =
        p.max_j_excess.max(norm(&p.ju) - ((-kappa * p.s).exp() + slack));
    if let Some(h) = p.h.as_ref() {
        let hb = m.third_bound() * p.s * (-kappa * p.s).exp() + slack;
        p.max_h_excess = p.max_h_excess.max(norm(h) - hb);
    }
    Ok(())
}

/// Exact Ornstein–Uhlenbeck transition for V = κ|x|²/2 with noise √2 dω:
/// X_t | X₀ = x ~ N(e^{−κt}x, (1 − e^{−2κt})/κ · I).
pub fn ou_transition_sample(kappa: f64, t: f64, x0: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
    let m = (-kappa * t).exp();
    let s = ((1.0 - (-2.0 * kappa * t).exp()) / kappa).sqrt();
    let mut z = vec![0.0; x0.len()];
    fill_normals(rng, &mut z);
    x0.iter().zip(&z).map(|(xi, zi)| m * xi + s * zi).collect()
}

fn n_steps_for(t: f64, dt: f64) -> usize {
    ((t / dt) - 1e-9).ceil().max(1.0) as usize
}

struct EuclidPathOut {
    c: f64,
    g: f64,
    t1: f64,
    t2: f64,
    mart: f64,
    qv: f64,
    max_j_excess: f64,
    max_h_excess: f64,
}

fn run_euclid_paths(
    m: &SourceMeasure,
    w: &Perturbation,
    x0: &[f64],
    u: &[f64],
    t: f64,
    cfg: &McConfig,
) -> Result<Vec<EuclidPathOut>> {
    cfg.validate()?;
    if m.space.is_sphere() {
        return Err(Error::InvalidParameter {
            name: "m",
            message: "Euclidean estimator on a sphere measure".into(),
        });
    }
    let d = m.space.ambient_dim();
    if x0.len() != d || u.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: x0.len().max(u.len()) });
    }
    let track_h = cfg.track_second_variation || m.third_bound() != 0.0;
    let n = n_steps_for(t, cfg.dt);
    let dt = t / n as f64;
    let outs: Vec<Result<EuclidPathOut>> = par_indexed_map(cfg.n_paths, |i| {
        let mut rng = substream(cfg.seed, i as u64);
        let mut p = EuclideanPath::new(x0, u, track_h);
        for _ in 0..n {
            step_euclidean(m, &mut p, dt, &mut rng)?;
        }
        let wv = w.value(&p.x);
        let c = (-wv).exp();
        let mut gw = vec![0.0; d];
        w.grad(&p.x, &mut gw);
        // ∇_u[e^{−W}(X_t)] = −⟨∇W(X_t), ∇X_t·u⟩ e^{−W(X_t)}
        let g = -dot(&gw, &p.ju) * c;
        // Bismut martingale term, per path: (1/(t√2)) ∇_u[f(X_t)] M_t
        let t1 = g * p.mart / (t * std::f64::consts::SQRT_2);
        // second-variation term collapsed along the path:
        // (1/t) ⟨∇f(X_t), ∇X_t ∫₀ᵗ(∇X_s)⁻¹∇²X_s ds⟩
        let t2 = match (&p.j, &p.a) {
            (Some(j), Some(a)) => {
                let mut ja = vec![0.0; d];
                j.matvec(a, &mut ja);
                -dot(&gw, &ja) * c / t
            }
            _ => 0.0,
        };
        Ok(EuclidPathOut {
            c,
            g,
            t1,
            t2,
            mart: p.mart,
            qv: p.qv,
            max_j_excess: p.max_j_excess,
            max_h_excess: if track_h { p.max_h_excess } else { f64::NEG_INFINITY },
        })
    });
    outs.into_iter().collect()
}

/// P̂_t e^{−W}(x) with standard error.
pub fn est_pt(
    m: &SourceMeasure,
    w: &Perturbation,
    x0: &[f64],
    t: f64,
    cfg: &McConfig,
) -> Result<SemigroupEstimate> {
    let cs = if m.space.is_sphere() {
        run_sphere_paths(&m.space, w, x0, None, t, cfg)?.into_iter().map(|o| o.c).collect::<Vec<_>>()
    } else {
        let d = m.space.ambient_dim();
        run_euclid_paths(m, w, x0, &vec![0.0; d], t, cfg)?.into_iter().map(|o| o.c).collect()
    };
    let (v, se) = mean_se(&cs);
    Ok(SemigroupEstimate { value: v, std_error: se })
}

/// ∂_u log P_t e^{−W}(x) = E[∇_u f(X_t)] / E[f(X_t)]. Errors with
/// `UnreliableRatio` when the denominator is within 10 standard errors of 0.
pub fn est_grad_log_pt(
    m: &SourceMeasure,
    w: &Perturbation,
    x0: &[f64],
    u: &[f64],
    t: f64,
    cfg: &McConfig,
) -> Result<SemigroupEstimate> {
    let (gs, cs): (Vec<f64>, Vec<f64>) = if m.space.is_sphere() {
        let outs = run_sphere_paths(&m.space, w, x0, Some(u), t, cfg)?;
        (outs.iter().map(|o| o.g).collect(), outs.iter().map(|o| o.c).collect())
    } else {
        let outs = run_euclid_paths(m, w, x0, u, t, cfg)?;
        (outs.iter().map(|o| o.g).collect(), outs.iter().map(|o| o.c).collect())
    };
    let (cm, cse) = mean_se(&cs);
    if cm.abs() < MIN_DENOMINATOR_SIGMAS * cse {
        return Err(Error::UnreliableRatio { value: cm, std_error: cse });
    }
    let (v, se) = ratio_se(&gs, &cs);
    Ok(SemigroupEstimate { value: v, std_error: se })
}

fn assemble_hess(
    a: Vec<f64>,  // term1 + term2, per path
    t1: Vec<f64>, // term1 per path
    t2: Vec<f64>, // term2 per path
    g: Vec<f64>,  // gradient numerator per path
    c: Vec<f64>,  // f(X_t) per path
    diagnostics: PathDiagnostics,
) -> Result<HessEstimate> {
    let (cm, cse) = mean_se(&c);
    if cm.abs() < MIN_DENOMINATOR_SIGMAS * cse {
        return Err(Error::UnreliableRatio { value: cm, std_error: cse });
    }
    let (hess, hse) = hess_log_se(&a, &g, &c);
    let (gl, glse) = ratio_se(&g, &c);
    let (r1, r1se) = ratio_se(&t1, &c);
    let (r2, r2se) = ratio_se(&t2, &c);
    Ok(HessEstimate {
        hess_log: hess,
        hess_log_se: hse,
        grad_log: gl,
        grad_log_se: glse,
        p: cm,
        p_se: cse,
        term1_over_p: r1,
        term1_se: r1se,
        term2_over_p: r2,
        term2_se: r2se,
        diagnostics,
    })
}

/// ∂²_{u,u} log P_t e^{−W}(x) on ℝᵈ via the two-term path representation.
pub fn est_hess_log_pt_euclidean(
    m: &SourceMeasure,
    w: &Perturbation,
    x0: &[f64],
    u: &[f64],
    t: f64,
    cfg: &McConfig,
) -> Result<HessEstimate> {
    let outs = run_euclid_paths(m, w, x0, u, t, cfg)?;
    let n = outs.len() as f64;
    let diagnostics = PathDiagnostics {
        max_j_excess: outs.iter().fold(f64::NEG_INFINITY, |m, o| m.max(o.max_j_excess)),
        max_h_excess: outs.iter().fold(f64::NEG_INFINITY, |m, o| m.max(o.max_h_excess)),
        mart_fourth_moment: neumaier_sum(&outs.iter().map(|o| o.mart.powi(4)).collect::<Vec<_>>()) / n,
        qv_second_moment: neumaier_sum(&outs.iter().map(|o| o.qv * o.qv).collect::<Vec<_>>()) / n,
    };
    let a = outs.iter().map(|o| o.t1 + o.t2).collect();
    let t1 = outs.iter().map(|o| o.t1).collect();
    let t2 = outs.iter().map(|o| o.t2).collect();
    let g = outs.iter().map(|o| o.g).collect();
    let c = outs.iter().map(|o| o.c).collect();
    assemble_hess(a, t1, t2, g, c, diagnostics)
}

/// Per-path diagnostics: discretized contraction bounds on the variation
/// flows. Nonpositive excesses certify |∇X·u| ≤ e^{−κ_eff t} + 10·dt and
/// |∇²X| ≤ K t e^{−κ_eff t} + 10·dt along every simulated path.
pub fn variation_flow_excesses(
    m: &SourceMeasure,
    x0: &[f64],
    u: &[f64],
    t: f64,
    cfg: &McConfig,
) -> Result<PathDiagnostics> {
    let w = Perturbation::zero(m.space);
    let outs = run_euclid_paths(m, &w, x0, u, t, cfg)?;
    let n = outs.len() as f64;
    Ok(PathDiagnostics {
        max_j_excess: outs.iter().fold(f64::NEG_INFINITY, |mx, o| mx.max(o.max_j_excess)),
        max_h_excess: outs.iter().fold(f64::NEG_INFINITY, |mx, o| mx.max(o.max_h_excess)),
        mart_fourth_moment: neumaier_sum(&outs.iter().map(|o| o.mart.powi(4)).collect::<Vec<_>>()) / n,
        qv_second_moment: neumaier_sum(&outs.iter().map(|o| o.qv * o.qv).collect::<Vec<_>>()) / n,
    })
}

/// Endpoint of the first-variation flow ∇X_t·u for a single path, plus the
/// endpoint of ∇²X (zero when untracked). Used by exactness tests.
pub fn single_path_variation(
    m: &SourceMeasure,
    x0: &[f64],
    u: &[f64],
    t: f64,
    dt: f64,
    seed: u64,
    track_h: bool,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut rng = substream(seed, 0);
    let mut p = EuclideanPath::new(x0, u, track_h);
    let n = n_steps_for(t, dt);
    let dt = t / n as f64;
    for _ in 0..n {
        step_euclidean(m, &mut p, dt, &mut rng)?;
    }
    let h = p.h.clone().unwrap_or_else(|| vec![0.0; x0.len()]);
    Ok((p.ju, h))
}

// ---------------------------------------------------------------------------
// Sphere
// ---------------------------------------------------------------------------

/// One sphere path: position, a parallel-transported orthonormal frame of
/// the start tangent space, and the two Bismut martingales. The driving
/// Brownian motion lives in the start tangent space via the frame.
pub struct SpherePath {
    pub x: Vec<f64>,
    pub frame: Vec<Vec<f64>>,
    /// −(1/T) ∫₀ᵗ e^{−(n−2)s} dB_s^{(u)} (u = frame direction 0)
    pub mart1: f64,
    /// ∫₀ᵗ e^{−(n−2)s} (1 − s/T) dB_s^{(⊥u)}, coordinates in the start frame
    pub mart2: Vec<f64>,
    pub qv1: f64,
    pub qv2: f64,
    pub s: f64,
    pub t_total: f64,
    eta: Vec<f64>,
    step: Vec<f64>,
    reorth_counter: usize,
}

impl SpherePath {
    /// `frame0` must be an orthonormal tangent basis at x0; direction 0 is
    /// the differentiation direction u.
    pub fn new(x0: &[f64], frame0: Vec<Vec<f64>>, t_total: f64) -> Self {
        let m = frame0.len();
        Self {
            x: x0.to_vec(),
            frame: frame0,
            mart1: 0.0,
            mart2: vec![0.0; m],
            qv1: 0.0,
            qv2: 0.0,
            s: 0.0,
            t_total,
            eta: vec![0.0; m],
            step: vec![0.0; x0.len()],
            reorth_counter: 0,
        }
    }
}

/// One geodesic random-walk step X ← exp_X(√(2dt) Ση_i e_i), with the frame
/// parallel-transported along the step and the Bismut martingales updated at
/// the left endpoint. Errors if a single step reaches length π/4.
pub fn step_sphere(
    space: &Space,
    p: &mut SpherePath,
    dt: f64,
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    let n2 = space.ambient_dim() as f64 - 2.0;
    let sdt = dt.sqrt();
    fill_normals(rng, &mut p.eta);

    // martingale updates (left endpoint): dB has coordinates η√dt in the
    // transported frame, which parallel transport identifies with the start
    // tangent space.
    let decay = (-n2 * p.s).exp();
    let k = 1.0 - p.s / p.t_total;
    p.mart1 += -(1.0 / p.t_total) * decay * p.eta[0] * sdt;
    p.qv1 += (1.0 / (p.t_total * p.t_total)) * decay * decay * dt;
    for i in 1..p.eta.len() {
        p.mart2[i] += decay * k * p.eta[i] * sdt;
    }
    p.qv2 += (p.eta.len() as f64 - 1.0) * decay * decay * k * k * dt;

    // position step
    let scale = (2.0 * dt).sqrt();
    for v in p.step.iter_mut() {
        *v = 0.0;
    }
    for (i, e) in p.frame.iter().enumerate() {
        for (sv, ev) in p.step.iter_mut().zip(e) {
            *sv += scale * p.eta[i] * ev;
        }
    }
    let len = norm(&p.step);
    if len >= MAX_SPHERE_STEP {
        return Err(Error::StepTooLarge(format!(
            "sphere step length {len:.3} >= {MAX_SPHERE_STEP:.3}; reduce dt"
        )));
    }
    let new_x = space.exp_map(&p.x, &p.step)?;
    for e in p.frame.iter_mut() {
        let te = space.parallel_transport(&p.x, &new_x, e)?;
        *e = te;
    }
    p.x = new_x;
    p.reorth_counter += 1;
    if p.reorth_counter % 64 == 0 {
        space.reorthonormalize(&p.x, &mut p.frame);
    }
    p.s += dt;
    Ok(())
}

struct SpherePathOut {
    c: f64,
    g: f64,
    t1: f64,
    t2: f64,
    qv1: f64,
    qv2: f64,
}

fn run_sphere_paths(
    space: &Space,
    w: &Perturbation,
    x0: &[f64],
    u: Option<&[f64]>,
    t: f64,
    cfg: &McConfig,
) -> Result<Vec<SpherePathOut>> {
    cfg.validate()?;
    if !space.is_sphere() {
        return Err(Error::InvalidParameter {
            name: "space",
            message: "sphere estimator needs a sphere".into(),
        });
    }
    let d = space.ambient_dim();
    if x0.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: x0.len() });
    }
    let n2 = d as f64 - 2.0;
    // frame: direction 0 is u (or an arbitrary basis vector when no
    // direction is requested)
    let frame0 = match u {
        Some(u) => space.complete_frame(x0, u)?,
        None => space.tangent_basis(x0)?,
    };
    let n = n_steps_for(t, cfg.dt);
    let dt = t / n as f64;
    let outs: Vec<Result<SpherePathOut>> = par_indexed_map(cfg.n_paths, |i| {
        let mut rng = substream(cfg.seed, i as u64);
        let mut p = SpherePath::new(x0, frame0.clone(), t);
        for _ in 0..n {
            step_sphere(space, &mut p, dt, &mut rng)?;
        }
        let c = (-w.value(&p.x)).exp();
        let mut gw = vec![0.0; d];
        w.grad(&p.x, &mut gw);
        // ∇f = −f ∇W at the endpoint; damped transport Q_t = e^{−(n−2)t}//_t
        let damp = (-n2 * t).exp();
        let g_u = -c * dot(&gw, &p.frame[0]) * damp;
        // term1 = −(1/√2) g(∇f, Q_t u) · mart1; the coefficient is pinned by
        // the exactly solvable first-harmonic case f = x₃ on 𝕊²
        let t1 = -std::f64::consts::FRAC_1_SQRT_2 * g_u * p.mart1;
        // term2 = √2 g(∇f, Q_t //_t mart2_vec) with mart2_vec ⊥ u
        let mut gdot = 0.0;
        for i in 1..p.frame.len() {
            gdot += dot(&gw, &p.frame[i]) * p.mart2[i];
        }
        let t2 = std::f64::consts::SQRT_2 * (-c) * damp * gdot;
        Ok(SpherePathOut { c, g: g_u, t1, t2, qv1: p.qv1, qv2: p.qv2 })
    });
    outs.into_iter().collect()
}

/// ∂²_{u,u} log P_t e^{−W} at a sphere point via the damped-transport path
/// representation (curvature term reduced in closed form for u = v).
pub fn est_hess_log_pt_sphere(
    space: &Space,
    w: &Perturbation,
    x0: &[f64],
    u: &[f64],
    t: f64,
    cfg: &McConfig,
) -> Result<HessEstimate> {
    let outs = run_sphere_paths(space, w, x0, Some(u), t, cfg)?;
    // exact caps on the discretized quadratic variations, up to O(dt)
    let qv1_cap = 1.0 / t;
    let qv2_cap = 0.5f64;
    let diagnostics = PathDiagnostics {
        max_j_excess: outs
            .iter()
            .fold(f64::NEG_INFINITY, |m, o| m.max(o.qv1 - qv1_cap).max(o.qv2 - qv2_cap)),
        max_h_excess: f64::NEG_INFINITY,
        mart_fourth_moment: 0.0,
        qv_second_moment: 0.0,
    };
    let a = outs.iter().map(|o| o.t1 + o.t2).collect();
    let t1 = outs.iter().map(|o| o.t1).collect();
    let t2 = outs.iter().map(|o| o.t2).collect();
    let g = outs.iter().map(|o| o.g).collect();
    let c = outs.iter().map(|o| o.c).collect();
    assemble_hess(a, t1, t2, g, c, diagnostics)
}

/// Point on the 𝕊² meridian at colatitude θ and the unit meridian tangent
/// (the direction of increasing θ).
pub fn meridian_point(theta: f64) -> (Vec<f64>, Vec<f64>) {
    (
        vec![theta.sin(), 0.0, theta.cos()],
        vec![theta.cos(), 0.0, -theta.sin()],
    )
}

// ---------------------------------------------------------------------------
// Martingale tail and reverse Hölder checks
// ---------------------------------------------------------------------------

/// ⟨M⟩_t for M = ∫₀ᵗ e^{−κs}dB_s: φ(t) = (1 − e^{−2κt})/(2κ).
pub fn qv_envelope(kappa: f64, t: f64) -> f64 {
    (1.0 - (-2.0 * kappa * t).exp()) / (2.0 * kappa)
}

#[derive(Debug, Clone, Copy)]
pub struct TailPoint {
    pub delta: f64,
    pub p_hat: f64,
    /// one-sided 99% binomial margin on p_hat
    pub margin_99: f64,
    /// sub-Gaussian bound 2 exp(−δ²/(2φ(t)))
    pub bound: f64,
}

/// Empirical tail P(|M_t| ≥ δ) for M = ∫₀ᵗ e^{−κs}dB_s against the
/// sub-Gaussian bound driven by the quadratic-variation envelope.
pub fn martingale_tail_sim(
    kappa: f64,
    t: f64,
    dt: f64,
    n_sims: usize,
    deltas: &[f64],
    seed: u64,
) -> Result<Vec<TailPoint>> {
    if n_sims == 0 || !(dt > 0.0) || !(t > 0.0) {
        return Err(Error::InvalidParameter { name: "martingale_tail_sim", message: "bad sizes".into() });
    }
    let n = n_steps_for(t, dt);
    let dt = t / n as f64;
    let sdt = dt.sqrt();
    let ms: Vec<f64> = par_indexed_map(n_sims, |i| {
        let mut rng = substream(seed, i as u64);
        let mut m = 0.0;
        let mut s = 0.0;
        let mut z = [0.0f64; 1];
        for _ in 0..n {
            fill_normals(&mut rng, &mut z);
            m += (-kappa * s).exp() * z[0] * sdt;
            s += dt;
        }
        m
    });
    let phi = qv_envelope(kappa, t);
    Ok(deltas
        .iter()
        .map(|&delta| {
            let hits = ms.iter().filter(|m| m.abs() >= delta).count();
            let p_hat = hits as f64 / n_sims as f64;
            TailPoint {
                delta,
                p_hat,
                margin_99: crate::stats::binomial_margin_99(p_hat, n_sims),
                bound: 2.0 * (-delta * delta / (2.0 * phi)).exp(),
            }
        })
        .collect())
}

/// Monte Carlo reverse-Hölder margin e^{L²(1−e^{−2κt})/κ}(P̂f)² − P̂(f²)
/// with a delta-method standard error (common paths for both estimates).
pub fn reverse_holder_mc(
    m: &SourceMeasure,
    w: &Perturbation,
    x0: &[f64],
    t: f64,
    cfg: &McConfig,
) -> Result<(f64, f64)> {
    let kappa = m.curvature_kappa();
    let l = w.lip();
    let c = (l * l * (1.0 - (-2.0 * kappa * t).exp()) / kappa).exp();
    let fs: Vec<f64> = if m.space.is_sphere() {
        run_sphere_paths(&m.space, w, x0, None, t, cfg)?.into_iter().map(|o| o.c).collect()
    } else {
        let d = m.space.ambient_dim();
        run_euclid_paths(m, w, x0, &vec![0.0; d], t, cfg)?.into_iter().map(|o| o.c).collect()
    };
    let f2s: Vec<f64> = fs.iter().map(|f| f * f).collect();
    let n = fs.len() as f64;
    let (am, _) = mean_se(&fs);
    let (bm, _) = mean_se(&f2s);
    let vaa = crate::stats::sample_cov(&fs, &fs) / n;
    let vbb = crate::stats::sample_cov(&f2s, &f2s) / n;
    let vab = crate::stats::sample_cov(&fs, &f2s) / n;
    let ga = 2.0 * c * am;
    let gb = -1.0;
    let var = (ga * ga * vaa + gb * gb * vbb + 2.0 * ga * gb * vab).max(0.0);
    Ok((c * am * am - bm, var.sqrt()))
}
