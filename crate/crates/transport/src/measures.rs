//! Source potentials V (uniformly convex, with third-derivative control) and
//! log-Lipschitz perturbations W, with analytic derivatives and exact
//! samplers for μ = e^{−V} and ν = e^{−W} dμ.

use crate::geometry::Space;
use crate::linalg::{dot, norm, scale};
use crate::rng::{fill_normals, substream};
use crate::{Error, Result};
use rand::Rng;

/// Potential families for the source measure μ = e^{−V}.
#[derive(Debug, Clone, PartialEq)]
pub enum SourceFamily {
    /// V(x) = κ|x|²/2, so μ = N(0, I/κ).
    GaussianQuadratic { kappa: f64 },
    /// V(x) = κ|x|²/2 + λ Σᵢ cos(xᵢ). Uniform convexity κ − λ, third
    /// derivatives bounded by λ.
    PerturbedConvex { kappa: f64, lambda: f64 },
    /// Uniform measure on the sphere (V ≡ 0); curvature comes from the space.
    SphereUniform,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceMeasure {
    pub space: Space,
    pub family: SourceFamily,
}

impl SourceMeasure {
    pub fn gaussian(space: Space, kappa: f64) -> Result<Self> {
        if !(kappa > 0.0) {
            return Err(Error::InvalidParameter { name: "kappa", message: "need kappa > 0".into() });
        }
        if space.is_sphere() {
            return Err(Error::InvalidParameter {
                name: "space",
                message: "GaussianQuadratic lives on Euclidean space".into(),
            });
        }
        Ok(Self { space, family: SourceFamily::GaussianQuadratic { kappa } })
    }

    pub fn perturbed_convex(space: Space, kappa: f64, lambda: f64) -> Result<Self> {
        if !(kappa > 0.0) || lambda < 0.0 || lambda >= kappa {
            return Err(Error::InvalidParameter {
                name: "lambda",
                message: "need 0 <= lambda < kappa".into(),
            });
        }
        if space.is_sphere() {
            return Err(Error::InvalidParameter {
                name: "space",
                message: "PerturbedConvex lives on Euclidean space".into(),
            });
        }
        Ok(Self { space, family: SourceFamily::PerturbedConvex { kappa, lambda } })
    }

    pub fn sphere_uniform(space: Space) -> Result<Self> {
        if !space.is_sphere() {
            return Err(Error::InvalidParameter {
                name: "space",
                message: "SphereUniform needs a sphere".into(),
            });
        }
        Ok(Self { space, family: SourceFamily::SphereUniform })
    }

    /// The curvature constant governing all decay rates: the uniform
    /// convexity of V on ℝⁿ (κ, or κ − λ for the perturbed family), n − 2 on
    /// the sphere.
    pub fn curvature_kappa(&self) -> f64 {
        match self.family {
            SourceFamily::GaussianQuadratic { kappa } => kappa,
            SourceFamily::PerturbedConvex { kappa, lambda } => kappa - lambda,
            SourceFamily::SphereUniform => (self.space.ambient_dim() as f64) - 2.0,
        }
    }

    /// Uniform bound K on |∇³V(x)(u, u)| over unit u.
    pub fn third_bound(&self) -> f64 {
        match self.family {
            SourceFamily::PerturbedConvex { lambda, .. } => lambda,
            _ => 0.0,
        }
    }

    pub fn potential(&self, x: &[f64]) -> f64 {
        match self.family {
            SourceFamily::GaussianQuadratic { kappa } => 0.5 * kappa * dot(x, x),
            SourceFamily::PerturbedConvex { kappa, lambda } => {
                0.5 * kappa * dot(x, x) + lambda * x.iter().map(|xi| xi.cos()).sum::<f64>()
            }
            SourceFamily::SphereUniform => 0.0,
        }
    }

    pub fn grad(&self, x: &[f64], out: &mut [f64]) {
        match self.family {
            SourceFamily::GaussianQuadratic { kappa } => {
                for (o, xi) in out.iter_mut().zip(x) {
                    *o = kappa * xi;
                }
            }
            SourceFamily::PerturbedConvex { kappa, lambda } => {
                for (o, xi) in out.iter_mut().zip(x) {
                    *o = kappa * xi - lambda * xi.sin();
                }
            }
            SourceFamily::SphereUniform => out.fill(0.0),
        }
    }

    /// out = ∇²V(x) · u
    pub fn hess_apply(&self, x: &[f64], u: &[f64], out: &mut [f64]) {
        match self.family {
            SourceFamily::GaussianQuadratic { kappa } => {
                for (o, ui) in out.iter_mut().zip(u) {
                    *o = kappa * ui;
                }
            }
            SourceFamily::PerturbedConvex { kappa, lambda } => {
                for ((o, ui), xi) in out.iter_mut().zip(u).zip(x) {
                    *o = (kappa - lambda * xi.cos()) * ui;
                }
            }
            SourceFamily::SphereUniform => out.fill(0.0),
        }
    }

    /// out = ∇³V(x)(u, v), the vector with components Σ_{jk} ∂³ᵢⱼₖV uⱼ vₖ.
    pub fn third_apply(&self, x: &[f64], u: &[f64], v: &[f64], out: &mut [f64]) {
        match self.family {
            SourceFamily::PerturbedConvex { lambda, .. } => {
                for (((o, ui), vi), xi) in out.iter_mut().zip(u).zip(v).zip(x) {
                    *o = lambda * xi.sin() * ui * vi;
                }
            }
            _ => out.fill(0.0),
        }
    }

    /// Exact i.i.d. samples from μ. Gaussian and sphere-uniform are direct;
    /// the perturbed family rejects against its Gaussian envelope.
    pub fn sample_source(&self, count: usize, seed: u64) -> Result<SampleBatch> {
        if count < 1 {
            return Err(Error::InvalidParameter { name: "count", message: "count >= 1".into() });
        }
        let d = self.space.ambient_dim();
        let mut points = Vec::with_capacity(count);
        match self.family {
            SourceFamily::GaussianQuadratic { kappa } => {
                let s = (1.0 / kappa).sqrt();
                for i in 0..count {
                    let mut rng = substream(seed, i as u64);
                    let mut x = vec![0.0; d];
                    fill_normals(&mut rng, &mut x);
                    scale(&mut x, s);
                    points.push(x);
                }
            }
            SourceFamily::SphereUniform => {
                for i in 0..count {
                    let mut rng = substream(seed, i as u64);
                    let mut x = vec![0.0; d];
                    loop {
                        fill_normals(&mut rng, &mut x);
                        if norm(&x) > 1e-8 {
                            break;
                        }
                    }
                    self.space.project_point(&mut x);
                    points.push(x);
                }
            }
            SourceFamily::PerturbedConvex { kappa, lambda } => {
                // density ∝ exp(−κ|x|²/2 − λΣcos xᵢ); proposal N(0, I/κ),
                // acceptance exp(−λ(Σcos xᵢ + d)) ≤ 1.
                let s = (1.0 / kappa).sqrt();
                let mut attempts = 0u64;
                for i in 0..count {
                    let mut rng = substream(seed, i as u64);
                    let mut x = vec![0.0; d];
                    let mut local = 0u64;
                    loop {
                        fill_normals(&mut rng, &mut x);
                        scale(&mut x, s);
                        attempts += 1;
                        local += 1;
                        let log_acc =
                            -lambda * (x.iter().map(|xi| xi.cos()).sum::<f64>() + d as f64);
                        let u: f64 = rng.random();
                        if u.ln() < log_acc {
                            break;
                        }
                        if local > 10_000 {
                            return Err(Error::Sampler(format!(
                                "rejection acceptance rate below 1e-3 (lambda = {lambda}); {attempts} attempts for {i} accepts"
                            )));
                        }
                    }
                    points.push(x.clone());
                }
            }
        }
        Ok(SampleBatch { points, weights: None, ess: None })
    }
}

/// Log-Lipschitz perturbation families; ν = e^{−W} dμ.
#[derive(Debug, Clone, PartialEq)]
pub enum PerturbationFamily {
    Zero,
    /// W(x) = ⟨l, x⟩; L = |l|.
    Linear { l: Vec<f64> },
    /// W(x) = c(√(|x|² + ε²) − ε); L = |c|. Smooth for ε > 0.
    SmoothedAbs { coeff: f64, eps: f64 },
    /// W(x) = c|x| with signed c; L = |c|. Not differentiable at 0: used by
    /// the 1D quadrature oracle (which never needs ∇W pointwise at 0). The
    /// map-spreading direction is c < 0 (weight e^{|c||x|}).
    Abs { coeff: f64 },
    /// W(x) = a⟨x, axis⟩ on the sphere; spherical gradient a(axis − ⟨axis,x⟩x).
    SphereLinear { a: f64, axis: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation {
    pub space: Space,
    pub family: PerturbationFamily,
}

impl Perturbation {
    pub fn zero(space: Space) -> Self {
        Self { space, family: PerturbationFamily::Zero }
    }

    pub fn linear(space: Space, l: Vec<f64>) -> Result<Self> {
        if l.len() != space.ambient_dim() {
            return Err(Error::DimensionMismatch { expected: space.ambient_dim(), got: l.len() });
        }
        Ok(Self { space, family: PerturbationFamily::Linear { l } })
    }

    pub fn smoothed_abs(space: Space, coeff: f64, eps: f64) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::InvalidParameter { name: "eps", message: "need eps > 0".into() });
        }
        Ok(Self { space, family: PerturbationFamily::SmoothedAbs { coeff, eps } })
    }

    pub fn abs(space: Space, coeff: f64) -> Self {
        Self { space, family: PerturbationFamily::Abs { coeff } }
    }

    pub fn sphere_linear(space: Space, a: f64, axis: Vec<f64>) -> Result<Self> {
        if !space.is_sphere() {
            return Err(Error::InvalidParameter {
                name: "space",
                message: "SphereLinear needs a sphere".into(),
            });
        }
        if axis.len() != space.ambient_dim() {
            return Err(Error::DimensionMismatch {
                expected: space.ambient_dim(),
                got: axis.len(),
            });
        }
        let mut axis = axis;
        let n = norm(&axis);
        if n == 0.0 {
            return Err(Error::InvalidParameter { name: "axis", message: "axis must be nonzero".into() });
        }
        scale(&mut axis, 1.0 / n);
        Ok(Self { space, family: PerturbationFamily::SphereLinear { a, axis } })
    }

    /// The log-Lipschitz constant L = sup |∇W| (spherical gradient on 𝕊ⁿ⁻¹).
    pub fn lip(&self) -> f64 {
        match &self.family {
            PerturbationFamily::Zero => 0.0,
            PerturbationFamily::Linear { l } => norm(l),
            PerturbationFamily::SmoothedAbs { coeff, .. } => coeff.abs(),
            PerturbationFamily::Abs { coeff } => coeff.abs(),
            PerturbationFamily::SphereLinear { a, .. } => a.abs(),
        }
    }

    /// Everywhere differentiable? (`Abs` is not, at the origin.)
    pub fn is_smooth(&self) -> bool {
        !matches!(self.family, PerturbationFamily::Abs { .. })
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match &self.family {
            PerturbationFamily::Zero => 0.0,
            PerturbationFamily::Linear { l } => dot(l, x),
            PerturbationFamily::SmoothedAbs { coeff, eps } => {
                coeff * ((dot(x, x) + eps * eps).sqrt() - eps)
            }
            PerturbationFamily::Abs { coeff } => coeff * norm(x),
            PerturbationFamily::SphereLinear { a, axis } => a * dot(x, axis),
        }
    }

    /// Gradient of W; on the sphere this is the spherical gradient (the
    /// ambient gradient projected onto T_x).
    pub fn grad(&self, x: &[f64], out: &mut [f64]) {
        match &self.family {
            PerturbationFamily::Zero => out.fill(0.0),
            PerturbationFamily::Linear { l } => out.copy_from_slice(l),
            PerturbationFamily::SmoothedAbs { coeff, eps } => {
                let s = (dot(x, x) + eps * eps).sqrt();
                for (o, xi) in out.iter_mut().zip(x) {
                    *o = coeff * xi / s;
                }
            }
            PerturbationFamily::Abs { coeff } => {
                let r = norm(x);
                if r == 0.0 {
                    out.fill(0.0);
                } else {
                    for (o, xi) in out.iter_mut().zip(x) {
                        *o = coeff * xi / r;
                    }
                }
            }
            PerturbationFamily::SphereLinear { a, axis } => {
                out.copy_from_slice(axis);
                scale(out, *a);
            }
        }
        if self.space.is_sphere() {
            let mut o = out.to_vec();
            self.space.make_tangent(x, &mut o);
            out.copy_from_slice(&o);
        }
    }

    /// 1D scalar derivatives (W, W', W'') for the quadrature oracle.
    /// Panics unless the family is one-dimensional and smooth (Abs reports
    /// its a.e. derivative; W'' of Abs is not defined at 0 and must not be
    /// requested there).
    pub fn scalar_derivs(&self, x: f64) -> (f64, f64, f64) {
        match &self.family {
            PerturbationFamily::Zero => (0.0, 0.0, 0.0),
            PerturbationFamily::Linear { l } => {
                assert_eq!(l.len(), 1);
                (l[0] * x, l[0], 0.0)
            }
            PerturbationFamily::SmoothedAbs { coeff, eps } => {
                let s = (x * x + eps * eps).sqrt();
                (coeff * (s - eps), coeff * x / s, coeff * eps * eps / (s * s * s))
            }
            PerturbationFamily::Abs { coeff } => (coeff * x.abs(), coeff * x.signum(), 0.0),
            PerturbationFamily::SphereLinear { .. } => {
                panic!("scalar_derivs is for 1D Euclidean families")
            }
        }
    }
}

/// A batch of samples. `weights` would be present only for importance-
/// weighted output; the shipped samplers resample to equal weights and
/// report the pre-resampling effective sample size instead.
#[derive(Debug, Clone)]
pub struct SampleBatch {
    pub points: Vec<Vec<f64>>,
    pub weights: Option<Vec<f64>>,
    pub ess: Option<f64>,
}

/// Self-normalized importance resampling for ν = e^{−W} dμ: draw 20·count
/// μ-samples, weight by e^{−W}, systematic-resample `count` points. Errors if
/// the effective sample size drops below count/2.
pub fn sample_target(
    m: &SourceMeasure,
    w: &Perturbation,
    count: usize,
    seed: u64,
) -> Result<SampleBatch> {
    if count < 1 {
        return Err(Error::InvalidParameter { name: "count", message: "count >= 1".into() });
    }
    let n_prop = 20 * count;
    let proposals = m.sample_source(n_prop, seed)?;
    let mut weights: Vec<f64> = Vec::with_capacity(n_prop);
    let mut max_logw = f64::NEG_INFINITY;
    let logw: Vec<f64> = proposals.points.iter().map(|x| -w.value(x)).collect();
    for &lw in &logw {
        max_logw = max_logw.max(lw);
    }
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    for &lw in &logw {
        let wi = (lw - max_logw).exp();
        sum += wi;
        sumsq += wi * wi;
        weights.push(wi);
    }
    let ess = sum * sum / sumsq;
    if ess < count as f64 / 2.0 {
        return Err(Error::Sampler(format!(
            "effective sample size {ess:.1} below count/2 = {}; increase the proposal budget",
            count / 2
        )));
    }
    // Systematic resampling with a single uniform offset.
    let mut rng = substream(seed, n_prop as u64);
    let u0: f64 = rng.random::<f64>() / count as f64;
    let step = 1.0 / count as f64;
    let total = sum;
    let mut points = Vec::with_capacity(count);
    let mut cum = 0.0;
    let mut j = 0usize;
    for k in 0..count {
        let target = (u0 + k as f64 * step) * total;
        while cum + weights[j] < target && j + 1 < n_prop {
            cum += weights[j];
            j += 1;
        }
        points.push(proposals.points[j].clone());
    }
    Ok(SampleBatch { points, weights: None, ess: Some(ess) })
}

/// All pointwise potential data at once: (V, ∇V, ∇²V·u, ∇³V(u,u), W, ∇W).
pub struct PotentialSuite {
    pub v: f64,
    pub grad_v: Vec<f64>,
    pub hess_v_u: Vec<f64>,
    pub third_v_uu: Vec<f64>,
    pub w: f64,
    pub grad_w: Vec<f64>,
}

pub fn eval_potential_suite(
    m: &SourceMeasure,
    w: &Perturbation,
    x: &[f64],
    u: &[f64],
) -> PotentialSuite {
    let d = x.len();
    let mut suite = PotentialSuite {
        v: m.potential(x),
        grad_v: vec![0.0; d],
        hess_v_u: vec![0.0; d],
        third_v_uu: vec![0.0; d],
        w: w.value(x),
        grad_w: vec![0.0; d],
    };
    m.grad(x, &mut suite.grad_v);
    m.hess_apply(x, u, &mut suite.hess_v_u);
    m.third_apply(x, u, u, &mut suite.third_v_uu);
    w.grad(x, &mut suite.grad_w);
    suite
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{ks_threshold_two_sample, ks_two_sample, mean_se};

    fn fd_grad(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        for i in 0..x.len() {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[i] += h;
            xm[i] -= h;
            g[i] = (f(&xp) - f(&xm)) / (2.0 * h);
        }
        g
    }

    #[test]
    fn potential_suite_examples() {
        let sp = Space::euclidean(2).unwrap();
        let m = SourceMeasure::gaussian(sp, 2.0).unwrap();
        let w = Perturbation::zero(sp);
        let s = eval_potential_suite(&m, &w, &[1.0, 1.0], &[1.0, 0.0]);
        assert!((s.v - 2.0).abs() < 1e-15);
        assert_eq!(s.grad_v, vec![2.0, 2.0]);
        assert_eq!(s.third_v_uu, vec![0.0, 0.0]);

        let sp1 = Space::euclidean(1).unwrap();
        let w = Perturbation::smoothed_abs(sp1, 1.0, 1e-3).unwrap();
        let (_, dw, _) = w.scalar_derivs(3.0);
        assert!((dw - 3.0 / (9.0f64 + 1e-6).sqrt()).abs() < 1e-15);

        let sp3 = Space::sphere(3).unwrap();
        let w = Perturbation::sphere_linear(sp3, 2.0, vec![0.0, 0.0, 1.0]).unwrap();
        let x = [0.6, 0.0, 0.8];
        let mut g = vec![0.0; 3];
        w.grad(&x, &mut g);
        let want = [2.0 * (0.0 - 0.8 * 0.6), 0.0, 2.0 * (1.0 - 0.8 * 0.8)];
        for i in 0..3 {
            assert!((g[i] - want[i]).abs() < 1e-14);
        }
        assert!((norm(&g) - 2.0 * (1.0f64 - 0.64).sqrt()).abs() < 1e-13);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let sp = Space::euclidean(3).unwrap();
        let m = SourceMeasure::perturbed_convex(sp, 1.0, 0.1).unwrap();
        let w = Perturbation::smoothed_abs(sp, 0.7, 1e-3).unwrap();
        let mut rng = substream(3, 0);
        for _ in 0..50 {
            let mut x = vec![0.0; 3];
            fill_normals(&mut rng, &mut x);
            let g = fd_grad(|y| m.potential(y), &x, 1e-5);
            let mut ga = vec![0.0; 3];
            m.grad(&x, &mut ga);
            for i in 0..3 {
                assert!((g[i] - ga[i]).abs() <= 1e-6 * (1.0 + ga[i].abs()), "V grad");
            }
            let gw = fd_grad(|y| w.value(y), &x, 1e-5);
            let mut gwa = vec![0.0; 3];
            w.grad(&x, &mut gwa);
            for i in 0..3 {
                assert!((gw[i] - gwa[i]).abs() <= 1e-6 * (1.0 + gwa[i].abs()), "W grad");
            }
        }
    }

    #[test]
    fn hessian_and_third_match_finite_differences() {
        let sp = Space::euclidean(2).unwrap();
        let m = SourceMeasure::perturbed_convex(sp, 1.5, 0.2).unwrap();
        let x = [0.4, -1.1];
        let u = [0.6, 0.8];
        let h = 1e-5;
        // FD of ∇V along u
        let mut gp = vec![0.0; 2];
        let mut gm = vec![0.0; 2];
        let xp: Vec<f64> = x.iter().zip(&u).map(|(a, b)| a + h * b).collect();
        let xm: Vec<f64> = x.iter().zip(&u).map(|(a, b)| a - h * b).collect();
        m.grad(&xp, &mut gp);
        m.grad(&xm, &mut gm);
        let mut hu = vec![0.0; 2];
        m.hess_apply(&x, &u, &mut hu);
        for i in 0..2 {
            let fd = (gp[i] - gm[i]) / (2.0 * h);
            assert!((fd - hu[i]).abs() < 1e-8);
        }
        // FD of ∇²V·u along u
        let mut hup = vec![0.0; 2];
        let mut hum = vec![0.0; 2];
        m.hess_apply(&xp, &u, &mut hup);
        m.hess_apply(&xm, &u, &mut hum);
        let mut tu = vec![0.0; 2];
        m.third_apply(&x, &u, &u, &mut tu);
        for i in 0..2 {
            let fd = (hup[i] - hum[i]) / (2.0 * h);
            assert!((fd - tu[i]).abs() < 1e-7);
        }
    }

    #[test]
    fn grad_w_bounded_by_lip_everywhere() {
        let sp3 = Space::euclidean(3).unwrap();
        let sps = Space::sphere(3).unwrap();
        let perts: Vec<Perturbation> = vec![
            Perturbation::zero(sp3),
            Perturbation::linear(sp3, vec![0.3, -0.4, 1.2]).unwrap(),
            Perturbation::smoothed_abs(sp3, 1.0, 1e-3).unwrap(),
            Perturbation::abs(sp3, -1.0),
            Perturbation::sphere_linear(sps, 1.5, vec![0.0, 0.0, 1.0]).unwrap(),
        ];
        let mut rng = substream(17, 0);
        for p in &perts {
            let l = p.lip();
            for _ in 0..10_000 {
                let mut x = vec![0.0; 3];
                fill_normals(&mut rng, &mut x);
                if p.space.is_sphere() {
                    p.space.project_point(&mut x);
                }
                let mut g = vec![0.0; 3];
                p.grad(&x, &mut g);
                assert!(norm(&g) <= l + 1e-12, "family {:?}", p.family);
            }
        }
    }

    #[test]
    fn gaussian_sampler_variance() {
        let sp = Space::euclidean(2).unwrap();
        let m = SourceMeasure::gaussian(sp, 4.0).unwrap();
        let batch = m.sample_source(500_000, 5).unwrap();
        for i in 0..2 {
            let xs: Vec<f64> = batch.points.iter().map(|p| p[i] * p[i]).collect();
            let (v, se) = mean_se(&xs);
            assert!((v - 0.25).abs() <= 3.0 * se, "coordinate {i}: {v} +- {se}");
        }
    }

    #[test]
    fn sphere_uniform_sampler_centered() {
        let sp = Space::sphere(3).unwrap();
        let m = SourceMeasure::sphere_uniform(sp).unwrap();
        let batch = m.sample_source(200_000, 6).unwrap();
        for i in 0..3 {
            let xs: Vec<f64> = batch.points.iter().map(|p| p[i]).collect();
            let (v, se) = mean_se(&xs);
            assert!(v.abs() <= 3.0 * se, "coordinate {i}: {v} +- {se}");
        }
        for p in batch.points.iter().take(100) {
            assert!((norm(p) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn perturbed_sampler_reduces_to_gaussian() {
        let sp = Space::euclidean(1).unwrap();
        let g = SourceMeasure::gaussian(sp, 1.0).unwrap();
        let p = SourceMeasure::perturbed_convex(sp, 1.0, 0.0).unwrap();
        let a: Vec<f64> = g.sample_source(40_000, 9).unwrap().points.iter().map(|x| x[0]).collect();
        let b: Vec<f64> = p.sample_source(40_000, 10).unwrap().points.iter().map(|x| x[0]).collect();
        let d = ks_two_sample(&a, &b);
        assert!(d <= ks_threshold_two_sample(0.01, a.len(), b.len()), "KS {d}");
    }

    #[test]
    fn perturbed_sampler_matches_density_moments() {
        // Sanity: with lambda > 0 the x-density tilts away from cos peaks;
        // compare E[cos x] against 1D quadrature of the exact density.
        let sp = Space::euclidean(1).unwrap();
        let m = SourceMeasure::perturbed_convex(sp, 1.0, 0.1).unwrap();
        let batch = m.sample_source(200_000, 11).unwrap();
        let xs: Vec<f64> = batch.points.iter().map(|p| p[0].cos()).collect();
        let (v, se) = mean_se(&xs);
        let dens = |x: f64| (-0.5 * x * x - 0.1 * x.cos()).exp();
        let z = crate::quad::adaptive(&dens, -10.0, 10.0, &[], 1e-12).unwrap();
        let num =
            crate::quad::adaptive(&|x: f64| x.cos() * dens(x), -10.0, 10.0, &[], 1e-12).unwrap();
        let want = num / z;
        assert!((v - want).abs() <= 3.5 * se, "{v} vs {want} +- {se}");
    }

    #[test]
    fn target_sampler_linear_shift() {
        let sp = Space::euclidean(1).unwrap();
        let m = SourceMeasure::gaussian(sp, 1.0).unwrap();
        let w = Perturbation::linear(sp, vec![1.0]).unwrap();
        let batch = sample_target(&m, &w, 50_000, 13).unwrap();
        assert!(batch.ess.unwrap() > 25_000.0);
        let xs: Vec<f64> = batch.points.iter().map(|p| p[0]).collect();
        let (v, se) = mean_se(&xs);
        // nu = N(-1, 1); resampling duplicates inflate the naive SE a bit.
        assert!((v + 1.0).abs() <= 5.0 * se.max(0.005), "{v} +- {se}");
    }

    #[test]
    fn target_sampler_zero_matches_source() {
        let sp = Space::euclidean(1).unwrap();
        let m = SourceMeasure::gaussian(sp, 1.0).unwrap();
        let w = Perturbation::zero(sp);
        let a: Vec<f64> =
            sample_target(&m, &w, 30_000, 21).unwrap().points.iter().map(|p| p[0]).collect();
        let b: Vec<f64> =
            m.sample_source(30_000, 22).unwrap().points.iter().map(|p| p[0]).collect();
        let d = ks_two_sample(&a, &b);
        assert!(d <= ks_threshold_two_sample(0.01, a.len(), b.len()), "KS {d}");
    }

    #[test]
    fn target_sampler_sphere_linear_mean() {
        let sp = Space::sphere(3).unwrap();
        let m = SourceMeasure::sphere_uniform(sp).unwrap();
        let w = Perturbation::sphere_linear(sp, 1.0, vec![0.0, 0.0, 1.0]).unwrap();
        let batch = sample_target(&m, &w, 100_000, 23).unwrap();
        let xs: Vec<f64> = batch.points.iter().map(|p| p[2]).collect();
        let (v, se) = mean_se(&xs);
        let want = -(1.0f64 / 1.0f64.tanh() - 1.0); // −(coth 1 − 1) ≈ −0.3130
        assert!((v - want).abs() <= 5.0 * se.max(0.004), "{v} vs {want} +- {se}");
    }
}
