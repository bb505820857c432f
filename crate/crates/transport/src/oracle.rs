//! Independent ground-truth backends: 1D Gaussian-source quadrature for
//! P_t e^{−W} and its log-derivatives, the exact monotone rearrangement map,
//! an isoperimetric margin check, and a Legendre spectral oracle on 𝕊².
//!
//! Nothing here shares code with the Monte Carlo estimators or the flow
//! integrator; agreement between the two routes is the correctness evidence.

use crate::bounds::gaussian_isoperimetric_profile;
use crate::measures::{Perturbation, PerturbationFamily};
use crate::quad::{adaptive, adaptive_vec, gauss_hermite, gauss_legendre, Comp};
use crate::special::{legendre_all, legendre_all_derivs, norm_cdf, norm_pdf};
use crate::{Error, Result};

/// Default relative accuracy target for oracle quadratures.
pub const ORACLE_TOL: f64 = 1e-12;
/// Integration window in standardized units; Gaussian mass outside ±12 is
/// below e^{−72} and invisible at the accuracy targets above.
const Z_MAX: f64 = 12.0;

/// Quadrature oracle for the 1D Ornstein–Uhlenbeck semigroup with source
/// V = κx²/2: P_t f(x) = ∫ f(e^{−κt}x + σ_t z) dΦ(z), σ_t² = (1 − e^{−2κt})/κ,
/// applied to f = e^{−W}.
pub struct Oracle1D {
    pub kappa: f64,
    pub w: Perturbation,
    /// Relative accuracy target for adaptive passes.
    pub tol: f64,
    gh_nodes: Vec<f64>,
    gh_weights: Vec<f64>,
    /// ∫ e^{−κy²/2 − W(y)} dy (Lebesgue normalizer of ν's density).
    z_nu: f64,
    /// Integration half-width for x-space densities.
    r: f64,
}

impl Oracle1D {
    pub fn new(kappa: f64, w: Perturbation) -> Result<Self> {
        Self::with_tol(kappa, w, ORACLE_TOL)
    }

    pub fn with_tol(kappa: f64, w: Perturbation, tol: f64) -> Result<Self> {
        if !(kappa > 0.0) {
            return Err(Error::InvalidParameter { name: "kappa", message: "need kappa > 0".into() });
        }
        if w.space.is_sphere() || w.space.ambient_dim() != 1 {
            return Err(Error::InvalidParameter {
                name: "w",
                message: "the quadrature oracle is one-dimensional Euclidean".into(),
            });
        }
        let (gh_nodes, gh_weights) = gauss_hermite(200);
        let l = w.lip();
        let r = l / kappa + 15.0 / kappa.sqrt();
        let f = |y: f64| (-0.5 * kappa * y * y - w.value(&[y])).exp();
        let z_nu = adaptive(&f, -r, r, &x_breaks(&w, -r, r), tol * 1e-2)?;
        Ok(Self { kappa, w, tol, gh_nodes, gh_weights, z_nu, r })
    }

    pub fn mean_scale(&self, t: f64) -> f64 {
        (-self.kappa * t).exp()
    }

    pub fn sigma(&self, t: f64) -> f64 {
        ((1.0 - (-2.0 * self.kappa * t).exp()) / self.kappa).sqrt()
    }

    fn is_gh_exact(&self) -> bool {
        matches!(self.w.family, PerturbationFamily::Zero | PerturbationFamily::Linear { .. })
    }

    /// (P, P', P'') of P_t e^{−W} at x, all from one quadrature pass:
    /// P' = e^{−κt} ∫ (−W') e^{−W} dΦ, P'' = e^{−2κt} ∫ (W'² − W'') e^{−W} dΦ.
    /// For W = c|x| the distributional W'' = 2c δ₀ is added in closed form.
    pub fn pt_derivs(&self, t: f64, x: f64) -> Result<[f64; 3]> {
        if t < 0.0 {
            return Err(Error::InvalidParameter { name: "t", message: "need t >= 0".into() });
        }
        if t == 0.0 {
            let (w, dw, ddw) = self.w.scalar_derivs(x);
            let f = (-w).exp();
            return Ok([f, -dw * f, (dw * dw - ddw) * f]);
        }
        let m = self.mean_scale(t) * x;
        let s = self.sigma(t);
        let integrand = |z: f64| -> Comp {
            let y = m + s * z;
            let (w, dw, ddw) = self.w.scalar_derivs(y);
            let f = (-w).exp() * norm_pdf(z);
            [f, -dw * f, (dw * dw - ddw) * f, 0.0]
        };
        let mut i = if self.is_gh_exact() {
            let mut acc = [0.0f64; 3];
            for (&zn, &wn) in self.gh_nodes.iter().zip(&self.gh_weights) {
                // physicists' nodes: z = √2·zn, weight wn/√π against N(0,1)
                let z = std::f64::consts::SQRT_2 * zn;
                let c = integrand(z);
                let scale = wn / (crate::bounds::SQRT_PI * norm_pdf(z));
                acc[0] += c[0] * scale;
                acc[1] += c[1] * scale;
                acc[2] += c[2] * scale;
            }
            acc
        } else {
            // rough scale from the coarse rule sets the absolute tolerance
            let mut rough = 0.0;
            for (&zn, &wn) in self.gh_nodes.iter().zip(&self.gh_weights) {
                let z = std::f64::consts::SQRT_2 * zn;
                rough += (-self.w.value(&[m + s * z])).exp() * wn / crate::bounds::SQRT_PI;
            }
            let tol = self.tol * rough.max(1e-290) / (2.0 * Z_MAX);
            let mut breaks = Vec::new();
            let z_kink = -m / s;
            if z_kink.abs() < Z_MAX {
                breaks.push(z_kink);
            }
            let v = adaptive_vec(&integrand, -Z_MAX, Z_MAX, &breaks, tol)?;
            [v[0], v[1], v[2]]
        };
        if let PerturbationFamily::Abs { coeff } = self.w.family {
            // delta part of W'' at y = 0: −∫ 2c δ(m + sz) e^{−W} φ = −2c φ(m/s)/s
            i[2] -= 2.0 * coeff * norm_pdf(m / s) / s;
        }
        let e1 = self.mean_scale(t);
        Ok([i[0], e1 * i[1], e1 * e1 * i[2]])
    }

    /// P_t e^{−W}(x).
    pub fn quad_pt(&self, t: f64, x: f64) -> Result<f64> {
        Ok(self.pt_derivs(t, x)?[0])
    }

    /// (∂ₓ log P_t e^{−W}, ∂ₓₓ log P_t e^{−W}) in one pass.
    pub fn log_derivs(&self, t: f64, x: f64) -> Result<(f64, f64)> {
        let [p, dp, ddp] = self.pt_derivs(t, x)?;
        if !(p > 0.0) || !p.is_finite() {
            return Err(Error::NonFinite { context: "oracle P_t", quantity: p });
        }
        let g = dp / p;
        Ok((g, ddp / p - g * g))
    }

    /// ∂ₓₓ log P_t e^{−W}(x).
    pub fn quad_hess_log_pt(&self, t: f64, x: f64) -> Result<f64> {
        Ok(self.log_derivs(t, x)?.1)
    }

    /// Independent finite-difference route to the same quantity (Richardson
    /// extrapolated central second difference of log P). Accuracy ~1e−7;
    /// used to cross-check the analytic integrands.
    pub fn hess_log_fd(&self, t: f64, x: f64, h: f64) -> Result<f64> {
        let lp = |y: f64| -> Result<f64> { Ok(self.quad_pt(t, y)?.ln()) };
        let d2 = |h: f64| -> Result<f64> {
            Ok((lp(x + h)? - 2.0 * lp(x)? + lp(x - h)?) / (h * h))
        };
        let a = d2(h)?;
        let b = d2(0.5 * h)?;
        Ok((4.0 * b - a) / 3.0)
    }

    /// Reverse-Hölder margin e^{L²σ_t²}(P_t e^{−W})² − P_t e^{−2W} ≥ 0.
    pub fn reverse_holder_margin(&self, t: f64, x: f64) -> Result<f64> {
        let p = self.quad_pt(t, x)?;
        let doubled = Oracle1D::with_tol(self.kappa, double_perturbation(&self.w)?, self.tol)?;
        let p2 = doubled.quad_pt(t, x)?;
        let l = self.w.lip();
        let s = self.sigma(t);
        Ok((l * l * s * s).exp() * p * p - p2)
    }

    /// Density of ν = e^{−W} dμ w.r.t. Lebesgue, normalized.
    pub fn density_nu(&self, y: f64) -> f64 {
        (-0.5 * self.kappa * y * y - self.w.value(&[y])).exp() / self.z_nu
    }

    /// Density of μ = N(0, 1/κ).
    pub fn density_mu(&self, x: f64) -> f64 {
        let sk = self.kappa.sqrt();
        sk * norm_pdf(sk * x)
    }

    pub fn cdf_mu(&self, x: f64) -> f64 {
        norm_cdf(self.kappa.sqrt() * x)
    }

    pub fn cdf_nu(&self, y: f64) -> Result<f64> {
        if y <= -self.r {
            return Ok(0.0);
        }
        let hi = y.min(self.r);
        let f = |u: f64| (-0.5 * self.kappa * u * u - self.w.value(&[u])).exp();
        let v = adaptive(&f, -self.r, hi, &x_breaks(&self.w, -self.r, hi), self.tol * 1e-2)?;
        Ok((v / self.z_nu).clamp(0.0, 1.0))
    }

    /// The increasing rearrangement T with T#μ = ν: T = F_ν⁻¹ ∘ F_μ,
    /// solved by bracketed bisection to 1e−12.
    pub fn monotone_map(&self, x: f64) -> Result<f64> {
        let p = self.cdf_mu(x);
        let (mut lo, mut hi) = (x - 1.0, x + 1.0);
        let mut k = 0;
        while self.cdf_nu(lo)? > p {
            lo -= (hi - lo).abs();
            k += 1;
            if k > 60 {
                return Err(Error::Bracket("monotone_map: no lower bracket".into()));
            }
        }
        k = 0;
        while self.cdf_nu(hi)? < p {
            hi += (hi - lo).abs();
            k += 1;
            if k > 60 {
                return Err(Error::Bracket("monotone_map: no upper bracket".into()));
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.cdf_nu(mid)? < p {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-12 {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// T'(x) = f_μ(x) / f_ν(T(x)).
    pub fn monotone_map_deriv(&self, x: f64) -> Result<f64> {
        let t = self.monotone_map(x)?;
        Ok(self.density_mu(x) / self.density_nu(t))
    }

    /// Isoperimetric margins f_ν(a) − √κ·I(F_ν(a))/m_const over a grid;
    /// all-nonnegative certifies the Gaussian-type isoperimetric inequality
    /// transported through an m_const-Lipschitz map.
    pub fn isoperimetry_check(&self, m_const: f64, grid: &[f64]) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(grid.len());
        for &a in grid {
            let p = self.cdf_nu(a)?;
            let margin = self.density_nu(a)
                - self.kappa.sqrt() * gaussian_isoperimetric_profile(p) / m_const;
            out.push(margin);
        }
        Ok(out)
    }

    /// Nested-quadrature Chapman–Kolmogorov value P_t(P_s e^{−W})(x); equals
    /// quad_pt(t + s, x) up to quadrature error. The inner function is
    /// smooth, so the outer Gauss–Hermite rule converges fast.
    pub fn two_step_pt(&self, t: f64, s: f64, x: f64) -> Result<f64> {
        let m = self.mean_scale(t) * x;
        let sg = self.sigma(t);
        let mut acc = 0.0;
        for (&zn, &wn) in self.gh_nodes.iter().zip(&self.gh_weights) {
            let z = std::f64::consts::SQRT_2 * zn;
            acc += self.quad_pt(s, m + sg * z)? * wn / crate::bounds::SQRT_PI;
        }
        Ok(acc)
    }
}

fn double_perturbation(w: &Perturbation) -> Result<Perturbation> {
    let space = w.space;
    Ok(match &w.family {
        PerturbationFamily::Zero => Perturbation::zero(space),
        PerturbationFamily::Linear { l } => {
            Perturbation::linear(space, l.iter().map(|v| 2.0 * v).collect())?
        }
        PerturbationFamily::SmoothedAbs { coeff, eps } => {
            Perturbation::smoothed_abs(space, 2.0 * coeff, *eps)?
        }
        PerturbationFamily::Abs { coeff } => Perturbation::abs(space, 2.0 * coeff),
        PerturbationFamily::SphereLinear { .. } => {
            return Err(Error::InvalidParameter {
                name: "w",
                message: "sphere families use the spectral oracle".into(),
            })
        }
    })
}

/// Potential kink locations inside [a, b] (for |·|-type families).
fn x_breaks(w: &Perturbation, a: f64, b: f64) -> Vec<f64> {
    match w.family {
        PerturbationFamily::Abs { .. } | PerturbationFamily::SmoothedAbs { .. }
            if a < 0.0 && b > 0.0 =>
        {
            vec![0.0]
        }
        _ => vec![],
    }
}

/// Spectral oracle on 𝕊² for W = a·x₃: f(θ) = e^{−a cos θ} expanded in
/// Legendre polynomials, P_t f = Σ c_ℓ e^{−ℓ(ℓ+1)t} P_ℓ(cos θ) for the
/// Laplace–Beltrami generator.
pub struct SphereOracle {
    pub a: f64,
    pub lmax: usize,
    coeffs: Vec<f64>,
}

/// Relative floor below which projected Legendre coefficients are quadrature
/// rounding noise rather than signal; genuine coefficients decay through it
/// super-exponentially. A spectrum whose last mode is still above the floor
/// is not converged and is rejected.
const SPECTRAL_NOISE_FLOOR: f64 = 1e-13;

impl SphereOracle {
    pub fn new(a: f64) -> Result<Self> {
        Self::with_lmax(a, 200)
    }

    pub fn with_lmax(a: f64, lmax: usize) -> Result<Self> {
        let (nodes, weights) = gauss_legendre(400);
        let mut coeffs = vec![0.0; lmax + 1];
        let mut p = vec![0.0; lmax + 1];
        for (&u, &w) in nodes.iter().zip(&weights) {
            legendre_all(lmax, u, &mut p);
            let f = (-a * u).exp() * w;
            for (c, pl) in coeffs.iter_mut().zip(&p) {
                *c += f * pl;
            }
        }
        for (l, c) in coeffs.iter_mut().enumerate() {
            *c *= (2.0 * l as f64 + 1.0) / 2.0;
        }
        let max = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        let floor = SPECTRAL_NOISE_FLOOR * max;
        let tail = coeffs[lmax].abs();
        if tail > floor {
            return Err(Error::Truncation { tail: tail / max, tol: SPECTRAL_NOISE_FLOOR });
        }
        // Zero out the noise-level tail so it cannot accumulate in the sums.
        let mut seen_signal = false;
        for c in coeffs.iter_mut().rev() {
            if !seen_signal && c.abs() <= floor {
                *c = 0.0;
            } else {
                seen_signal = true;
            }
        }
        Ok(Self { a, lmax, coeffs })
    }

    /// (F, dF/dθ, d²F/dθ²) for F(θ) = P_t e^{−W} along a meridian.
    pub fn f_derivs(&self, t: f64, theta: f64) -> (f64, f64, f64) {
        let u = theta.cos();
        let s = theta.sin();
        let (p, dp, ddp) = legendre_all_derivs(self.lmax, u);
        let (mut f, mut fu, mut fuu) = (0.0, 0.0, 0.0);
        for l in 0..=self.lmax {
            let lam = (l * (l + 1)) as f64;
            let e = self.coeffs[l] * (-lam * t).exp();
            f += e * p[l];
            fu += e * dp[l];
            fuu += e * ddp[l];
        }
        // chain rule through u = cos θ
        let f1 = -s * fu;
        let f2 = s * s * fuu - u * fu;
        (f, f1, f2)
    }

    pub fn spectral_pt(&self, t: f64, theta: f64) -> f64 {
        self.f_derivs(t, theta).0
    }

    pub fn spectral_grad_log(&self, t: f64, theta: f64) -> f64 {
        let (f, f1, _) = self.f_derivs(t, theta);
        f1 / f
    }

    /// Meridian–meridian component of ∇² log P_t e^{−W}.
    pub fn spectral_hess_log(&self, t: f64, theta: f64) -> f64 {
        let (f, f1, f2) = self.f_derivs(t, theta);
        f2 / f - (f1 / f) * (f1 / f)
    }

    /// Azimuthal component of ∇² log P_t e^{−W}: cot θ · ∂_θ log F (the
    /// azimuthal gradient vanishes by axisymmetry).
    pub fn spectral_hess_log_phi(&self, t: f64, theta: f64) -> f64 {
        let (f, f1, _) = self.f_derivs(t, theta);
        (theta.cos() / theta.sin()) * f1 / f
    }

    /// Reverse-Hölder margin on the sphere with curvature rate n − 2 = 1:
    /// e^{a²(1−e^{−2t})}(P_t e^{−W})² − P_t e^{−2W} ≥ 0.
    pub fn reverse_holder_margin(&self, t: f64, theta: f64) -> Result<f64> {
        let doubled = SphereOracle::with_lmax(2.0 * self.a, self.lmax)?;
        let p = self.spectral_pt(t, theta);
        let p2 = doubled.spectral_pt(t, theta);
        let l = self.a.abs();
        Ok((l * l * (1.0 - (-2.0 * t).exp())).exp() * p * p - p2)
    }
}
