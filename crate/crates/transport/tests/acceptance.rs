//! End-to-end acceptance gate: each test certifies one headline guarantee at
//! its stated tolerance and prints a single PASS/FAIL line. Seeds are fixed;
//! every number here is reproducible bit-for-bit.

use std::time::Instant;
use transport::bounds::{
    integrate_theta, theta_euclidean, theta_sphere, ConstantForm, ManifoldThetaVariant, Setting,
    SQRT_PI,
};
use transport::flow::{
    flow_map_batch, pushforward_ks_quantile_grid, empirical_lipschitz, FlowDirection,
    VelocityBackend,
};
use transport::geometry::Space;
use transport::measures::{Perturbation, SourceMeasure};
use transport::oracle::{Oracle1D, SphereOracle};
use transport::semigroup::{
    est_hess_log_pt_euclidean, est_hess_log_pt_sphere, martingale_tail_sim, meridian_point,
    single_path_variation, variation_flow_excesses, McConfig,
};

fn report(id: &str, pass: bool, detail: &str) {
    println!("[{id}] {}: {detail}", if pass { "PASS" } else { "FAIL" });
}

fn log_spaced(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a * (b / a).powf(i as f64 / (n - 1) as f64)).collect()
}

fn uniform(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

fn smoothed_abs_1d() -> Perturbation {
    let sp = Space::euclidean(1).unwrap();
    Perturbation::smoothed_abs(sp, 1.0, 1e-3).unwrap()
}

/// Piecewise-linear interpolation on a sorted node grid.
fn lin_interp(xs: &[f64], ys: &[f64], q: f64) -> f64 {
    let n = xs.len();
    if q <= xs[0] {
        return ys[0];
    }
    if q >= xs[n - 1] {
        return ys[n - 1];
    }
    let i = xs.partition_point(|&v| v <= q).min(n - 1);
    let (x0, x1) = (xs[i - 1], xs[i]);
    let w = (q - x0) / (x1 - x0);
    ys[i - 1] * (1.0 - w) + ys[i] * w
}

// Upper envelope for ∇²log P_t e^{−W} certified on a (t, x) grid by exact
// quadrature; must finish inside a minute.
#[test]
fn a01_hessian_envelope_certified_on_grid() {
    let clock = Instant::now();
    let oracle = Oracle1D::new(1.0, smoothed_abs_1d()).unwrap();
    let ts = log_spaced(0.05, 5.0, 20);
    let xs = uniform(-8.0, 8.0, 41);
    let mut worst = f64::NEG_INFINITY;
    let mut worst_at = (0.0, 0.0);
    for &t in &ts {
        let envelope = theta_euclidean(t, 1.0, 1.0, 0.0);
        for &x in &xs {
            let h = oracle.quad_hess_log_pt(t, x).unwrap();
            let excess = h - envelope;
            if excess > worst {
                worst = excess;
                worst_at = (t, x);
            }
        }
    }
    let secs = clock.elapsed().as_secs_f64();
    let pass = worst <= 1e-9 && secs < 60.0;
    report(
        "A01",
        pass,
        &format!(
            "hessian envelope on 20x41 grid: worst excess {worst:.3e} at (t,x)=({:.3},{:.1}), {secs:.1}s",
            worst_at.0, worst_at.1
        ),
    );
    assert!(pass);
}

// Path-sampled Hessian estimator against exact quadrature, including the
// per-term martingale and second-variation bounds.
#[test]
fn a02_mc_hessian_matches_quadrature_within_3se() {
    let clock = Instant::now();
    let sp = Space::euclidean(1).unwrap();
    let m = SourceMeasure::gaussian(sp, 1.0).unwrap();
    let w = smoothed_abs_1d();
    let oracle = Oracle1D::new(1.0, smoothed_abs_1d()).unwrap();
    let mut cfg = McConfig::new(200_000, 1e-3, 8_002);
    cfg.track_second_variation = true;
    let mut pass = true;
    let mut lines = Vec::new();
    for &(t, x) in &[(0.1, 0.0), (0.5, 1.0), (1.0, -2.0)] {
        let est = est_hess_log_pt_euclidean(&m, &w, &[x], &[1.0], t, &cfg).unwrap();
        let exact = oracle.quad_hess_log_pt(t, x).unwrap();
        let dev = (est.hess_log - exact).abs();
        let ok_val = dev <= 3.0 * est.hess_log_se;
        // martingale term: |term1|/P ≤ 5 e^{−κt}(L² + L/√t)
        let b1 = 5.0 * (-t).exp() * (1.0 + 1.0 / t.sqrt());
        let ok_t1 = est.term1_over_p.abs() <= b1 + 3.0 * est.term1_se;
        // second-variation term: |term2|/P ≤ L·K·t·e^{−κt}/2 = 0 here (K = 0)
        let ok_t2 = est.term2_over_p.abs() <= 3.0 * est.term2_se;
        pass &= ok_val && ok_t1 && ok_t2;
        lines.push(format!(
            "(t={t},x={x}): dev {dev:.2e} vs 3se {:.2e}, |t1| {:.3} vs {b1:.3}, |t2| {:.1e}",
            3.0 * est.hess_log_se,
            est.term1_over_p.abs(),
            est.term2_over_p.abs()
        ));
    }
    let secs = clock.elapsed().as_secs_f64();
    pass &= secs < 300.0;
    report("A02", pass, &format!("{} | {secs:.1}s", lines.join(" | ")));
    assert!(pass);
}

// The ODE-built inverse flow against the monotone rearrangement, then its
// pushforward against the quadrature law of the target on a 10^4 quantile
// grid. The flow is evaluated on a fine node grid and interpolated linearly
// in between; the node spacing keeps the interpolation error far below both
// tolerances.
#[test]
fn a03_inverse_flow_matches_rearrangement_and_pushforward() {
    let clock = Instant::now();
    let flow_oracle = Oracle1D::with_tol(1.0, smoothed_abs_1d(), 1e-9).unwrap();
    let backend = VelocityBackend::Oracle1D(flow_oracle);
    let nodes = uniform(-4.2, 4.2, 169);
    let inputs: Vec<Vec<f64>> = nodes.iter().map(|&x| vec![x]).collect();
    let results = flow_map_batch(&backend, &inputs, 8.0, 800, FlowDirection::Inverse).unwrap();
    let images: Vec<f64> = results.iter().map(|r| r.point[0]).collect();
    for w in images.windows(2) {
        assert!(w[1] > w[0], "inverse flow must stay monotone");
    }
    let cmp = Oracle1D::new(1.0, smoothed_abs_1d()).unwrap();
    let mut max_diff = 0.0f64;
    for k in 0..41 {
        let j = 4 + 4 * k;
        let exact = cmp.monotone_map(nodes[j]).unwrap();
        max_diff = max_diff.max((images[j] - exact).abs());
    }
    let map = |q: f64| -> transport::Result<f64> { Ok(lin_interp(&nodes, &images, q)) };
    let ks = pushforward_ks_quantile_grid(&cmp, &map, 10_000).unwrap();
    let secs = clock.elapsed().as_secs_f64();
    let pass = max_diff <= 1e-2 && ks <= 1e-3;
    report(
        "A03",
        pass,
        &format!("max |flow − rearrangement| {max_diff:.2e} (tol 1e-2), pushforward KS {ks:.2e} (tol 1e-3), {secs:.0}s"),
    );
    assert!(pass);
}

// Sharpness of e^{L²/2} from the two-sided-exponential target, plus the
// empirical stretch of both flow directions against the certified constants.
#[test]
fn a04_sharpness_and_lipschitz_sandwich() {
    let clock = Instant::now();
    let sp = Space::euclidean(1).unwrap();
    let spread = Oracle1D::new(1.0, Perturbation::abs(sp, -1.0)).unwrap();
    let mut sup_deriv = 0.0f64;
    for &x in &uniform(-2.0, 2.0, 21) {
        sup_deriv = sup_deriv.max(spread.monotone_map_deriv(x).unwrap());
    }
    let sharp_floor = 0.5f64.exp() * (1.0 - 1e-2);

    let backend = VelocityBackend::Oracle1D(Oracle1D::with_tol(1.0, smoothed_abs_1d(), 1e-9).unwrap());
    let inputs: Vec<Vec<f64>> = uniform(-4.0, 4.0, 21).into_iter().map(|x| vec![x]).collect();
    let t_batch = flow_map_batch(&backend, &inputs, 8.0, 800, FlowDirection::Inverse).unwrap();
    let s_batch = flow_map_batch(&backend, &inputs, 8.0, 800, FlowDirection::Forward).unwrap();
    let lip_t = empirical_lipschitz(&sp, &inputs, &t_batch);
    let lip_s = empirical_lipschitz(&sp, &inputs, &s_batch);
    let bound_t = (5.0 + 5.0 * SQRT_PI).exp();
    let bound_s = (10.5 + 5.0 * SQRT_PI).exp();
    let secs = clock.elapsed().as_secs_f64();
    let pass = sup_deriv >= sharp_floor && lip_t <= bound_t && lip_s <= bound_s;
    report(
        "A04",
        pass,
        &format!(
            "sup T' {sup_deriv:.4} >= {sharp_floor:.4}; lip(T) {lip_t:.3} <= {bound_t:.3e}; lip(S) {lip_s:.3} <= {bound_s:.3e}; {secs:.0}s"
        ),
    );
    assert!(pass);
}

// Sphere: spectral Hessian under its envelope across the (t, θ) grid, and
// the path estimator against the spectral values at two reference points.
#[test]
fn a05_sphere_envelope_and_path_estimator() {
    let clock = Instant::now();
    let oracle = SphereOracle::new(1.0).unwrap();
    let mut worst = f64::NEG_INFINITY;
    for &t in &log_spaced(0.05, 3.0, 20) {
        let envelope = theta_sphere(t, 1.0, 3);
        for &theta in &uniform(0.2, std::f64::consts::PI - 0.2, 41) {
            worst = worst.max(oracle.spectral_hess_log(t, theta) - envelope);
        }
    }
    let grid_ok = worst <= 1e-9;

    let space = Space::sphere(3).unwrap();
    let w = Perturbation::sphere_linear(space, 1.0, vec![0.0, 0.0, 1.0]).unwrap();
    let cfg = McConfig::new(200_000, 1e-3, 8_005);
    let mut mc_ok = true;
    let mut lines = Vec::new();
    for &(t, theta) in &[(0.1, 1.0), (0.5, 2.0)] {
        let (x0, u) = meridian_point(theta);
        let est = est_hess_log_pt_sphere(&space, &w, &x0, &u, t, &cfg).unwrap();
        let exact = oracle.spectral_hess_log(t, theta);
        let dev = (est.hess_log - exact).abs();
        mc_ok &= dev <= 3.0 * est.hess_log_se;
        lines.push(format!("(t={t},θ={theta}): dev {dev:.2e} vs 3se {:.2e}", 3.0 * est.hess_log_se));
    }
    let secs = clock.elapsed().as_secs_f64();
    let pass = grid_ok && mc_ok;
    report(
        "A05",
        pass,
        &format!("grid excess {worst:.2e} (tol 1e-9) | {} | {secs:.0}s", lines.join(" | ")),
    );
    assert!(pass);
}

// Reverse Hölder margin e^{L²σ²}(P_t e^{−W})² − P_t e^{−2W} ≥ 0 by exact
// quadrature on the line and by the spectral route on the sphere.
#[test]
fn a06_reverse_holder_margins_nonnegative() {
    let clock = Instant::now();
    let line = Oracle1D::new(1.0, smoothed_abs_1d()).unwrap();
    let mut worst_line = f64::INFINITY;
    for &t in &log_spaced(0.05, 5.0, 20) {
        for &x in &uniform(-8.0, 8.0, 41) {
            worst_line = worst_line.min(line.reverse_holder_margin(t, x).unwrap());
        }
    }
    let sphere = SphereOracle::new(1.0).unwrap();
    let mut worst_sphere = f64::INFINITY;
    for &t in &log_spaced(0.05, 3.0, 20) {
        for &theta in &uniform(0.2, std::f64::consts::PI - 0.2, 41) {
            worst_sphere = worst_sphere.min(sphere.reverse_holder_margin(t, theta).unwrap());
        }
    }
    let secs = clock.elapsed().as_secs_f64();
    let pass = worst_line >= -1e-10 && worst_sphere >= -1e-10;
    report(
        "A06",
        pass,
        &format!("min margin: line {worst_line:.2e}, sphere {worst_sphere:.2e} (floor -1e-10); {secs:.0}s"),
    );
    assert!(pass);
}

// Sub-Gaussian tail of M_t = ∫₀ᵗ e^{−s} dB_s at t = 1 from 10⁵ simulated
// paths, with a one-sided 99% binomial allowance.
#[test]
fn a07_martingale_tail_under_subgaussian_bound() {
    let clock = Instant::now();
    let points = martingale_tail_sim(1.0, 1.0, 1e-3, 100_000, &[0.5, 1.0, 2.0], 8_007).unwrap();
    let mut pass = true;
    let mut lines = Vec::new();
    for p in &points {
        let ok = p.p_hat <= p.bound + p.margin_99;
        pass &= ok;
        lines.push(format!("δ={}: {:.4} <= {:.4}+{:.4}", p.delta, p.p_hat, p.bound, p.margin_99));
    }
    let secs = clock.elapsed().as_secs_f64();
    report("A07", pass, &format!("{} | {secs:.0}s", lines.join(" | ")));
    assert!(pass);
}

// First/second variation flows: exact decay in the Gaussian case and the
// per-path envelopes |J| ≤ e^{−κt} + 10dt, |H| ≤ K t e^{−κt} + 10dt in the
// perturbed-convex case.
#[test]
fn a08_variation_flows_obey_envelopes() {
    let clock = Instant::now();
    let sp = Space::euclidean(1).unwrap();
    let gauss = SourceMeasure::gaussian(sp, 1.0).unwrap();
    let mut pass = true;
    let mut lines = Vec::new();
    for (i, &t) in [0.5, 1.0, 3.0].iter().enumerate() {
        let (ju, h) = single_path_variation(&gauss, &[0.0], &[1.0], t, 1e-4, 8_008 + i as u64, true).unwrap();
        let rel = (ju[0] - (-t).exp()).abs() / (-t).exp();
        let ok = rel <= 1e-3 && h[0] == 0.0;
        pass &= ok;
        lines.push(format!("t={t}: |J−e^−t| rel {rel:.1e}, H {:.1}", h[0]));
    }
    let pc = SourceMeasure::perturbed_convex(sp, 1.0, 0.1).unwrap();
    let mut cfg = McConfig::new(1_000, 1e-3, 8_018);
    cfg.track_second_variation = true;
    let diag = variation_flow_excesses(&pc, &[0.3], &[1.0], 3.0, &cfg).unwrap();
    let ok = diag.max_j_excess <= 0.0 && diag.max_h_excess <= 0.0;
    pass &= ok;
    lines.push(format!(
        "perturbed: J excess {:.2e}, H excess {:.2e}",
        diag.max_j_excess, diag.max_h_excess
    ));
    let secs = clock.elapsed().as_secs_f64();
    report("A08", pass, &format!("{} | {secs:.0}s", lines.join(" | ")));
    assert!(pass);
}

// Closed-form constants reproduced to 1e−12 relative, and the numeric
// ∫θ dt matching the log of the tight constants to 1e−6 relative.
#[test]
fn a09_constant_regressions_and_profile_integrals() {
    let euclid = Setting::Euclidean { l: 1.0, kappa: 1.0, k3: 0.0 };
    let sphere = Setting::Sphere { l: 1.0, ambient_dim: 3 };
    let manifold = Setting::Manifold {
        l: 1.0,
        kappa: 1.0,
        riem: 0.0,
        beta: 0.0,
        variant: ManifoldThetaVariant::Statement,
    };
    let rel = |a: f64, b: f64| (a / b - 1.0).abs();
    let mut pass = true;
    pass &= rel(euclid.lip_const(ConstantForm::Stated), 20.0f64.exp()) <= 1e-12;
    pass &= rel(sphere.lip_const(ConstantForm::Stated), 70.0f64.exp()) <= 1e-12;
    pass &= rel(manifold.lip_const(ConstantForm::Stated), 0.5f64.exp().exp()) <= 1e-12;
    pass &= rel(euclid.inverse_lip_const(), (10.5 + 5.0 * SQRT_PI).exp()) <= 1e-12;
    pass &= rel(sphere.inverse_lip_const(), 70.5f64.exp()) <= 1e-12;
    let ie = integrate_theta(&euclid, 1e-9).unwrap();
    let is = integrate_theta(&sphere, 1e-9).unwrap();
    let de = rel(ie, euclid.lip_const(ConstantForm::Tight).ln());
    let ds = rel(is, sphere.lip_const(ConstantForm::Tight).ln());
    pass &= de <= 1e-6 && ds <= 1e-6;
    report(
        "A09",
        pass,
        &format!("closed forms at 1e-12; ∫θ: line rel {de:.1e}, sphere rel {ds:.1e} (tol 1e-6)"),
    );
    assert!(pass);
}

// Gaussian-type isoperimetry transported through an M-Lipschitz map:
// f_ν(a) ≥ √κ · I(F_ν(a))/M on a wide grid.
#[test]
fn a10_isoperimetric_transfer_margin_nonnegative() {
    let clock = Instant::now();
    let oracle = Oracle1D::new(1.0, smoothed_abs_1d()).unwrap();
    let m_const = Setting::Euclidean { l: 1.0, kappa: 1.0, k3: 0.0 }.lip_const(ConstantForm::Tight);
    let margins = oracle.isoperimetry_check(m_const, &uniform(-6.0, 6.0, 41)).unwrap();
    let worst = margins.iter().cloned().fold(f64::INFINITY, f64::min);
    let secs = clock.elapsed().as_secs_f64();
    let pass = worst >= 0.0;
    report("A10", pass, &format!("min margin {worst:.3e} over 41 points (floor 0); {secs:.0}s"));
    assert!(pass);
}
