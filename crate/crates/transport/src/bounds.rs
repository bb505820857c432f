//! Certified decay profiles θ_t for sup-norm Hessian bounds on log P_t e^{−W},
//! and the Lipschitz constants obtained by integrating them.
//!
//! Conventions: L is the log-Lipschitz bound on the perturbation W, κ (or
//! n − 2 on 𝕊ⁿ⁻¹ ⊂ ℝⁿ) the curvature rate, K a uniform bound on third
//! derivatives of the source potential, `riem` a sectional-curvature-scale
//! bound and `beta` a Ricci-gradient-scale bound for the general setting.
//! All constants are exact closed forms; `integrate_theta`/`integrate_ell`
//! recover them independently by quadrature.

use crate::quad::adaptive;
use crate::special::{norm_pdf, norm_ppf};
use crate::Result;

pub const SQRT_PI: f64 = 1.7724538509055160273;

/// Which published form of the general-setting decay rate to use. The two
/// differ in the short-time factor: `Proof` carries 1/√(e^{2κt}−1),
/// `Statement` the larger 1/√(e^{κt}−1). Integrated constants certify the
/// `Proof` variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ManifoldThetaVariant {
    Proof,
    Statement,
}

/// Which Lipschitz constant to report: `Tight` is the exact integral of the
/// decay profile; `Stated` is the rounded-up headline form (always ≥ tight).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstantForm {
    Tight,
    Stated,
}

/// Parameter sets for the three geometric settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Setting {
    /// ℝᵈ with V κ-uniformly convex, |∇³V| ≤ k3, W L-Lipschitz.
    Euclidean { l: f64, kappa: f64, k3: f64 },
    /// 𝕊ⁿ⁻¹ ⊂ ℝⁿ (ambient_dim = n ≥ 3), uniform source, W L-Lipschitz.
    Sphere { l: f64, ambient_dim: usize },
    /// General positively curved setting with curvature rate κ, sectional
    /// bound `riem`, Ricci-gradient bound `beta`.
    Manifold { l: f64, kappa: f64, riem: f64, beta: f64, variant: ManifoldThetaVariant },
}

impl Setting {
    /// The exponential decay rate κ_eff appearing in e^{−κ_eff t} factors.
    pub fn kappa_eff(&self) -> f64 {
        match *self {
            Setting::Euclidean { kappa, .. } => kappa,
            Setting::Sphere { ambient_dim, .. } => ambient_dim as f64 - 2.0,
            Setting::Manifold { kappa, .. } => kappa,
        }
    }

    pub fn lip(&self) -> f64 {
        match *self {
            Setting::Euclidean { l, .. } => l,
            Setting::Sphere { l, .. } => l,
            Setting::Manifold { l, .. } => l,
        }
    }

    pub fn theta(&self, t: f64) -> f64 {
        match *self {
            Setting::Euclidean { l, kappa, k3 } => theta_euclidean(t, l, kappa, k3),
            Setting::Sphere { l, ambient_dim } => theta_sphere(t, l, ambient_dim),
            Setting::Manifold { l, kappa, riem, beta, variant } => {
                theta_manifold(t, l, kappa, riem, beta, variant)
            }
        }
    }

    pub fn ell(&self, t: f64) -> f64 {
        ell_profile(self, t)
    }

    pub fn lip_const(&self, form: ConstantForm) -> f64 {
        match *self {
            Setting::Euclidean { l, kappa, k3 } => lip_const_euclidean(l, kappa, k3, form),
            Setting::Sphere { l, ambient_dim } => lip_const_sphere(l, ambient_dim, form),
            Setting::Manifold { l, kappa, riem, beta, .. } => {
                lip_const_manifold(l, kappa, riem, beta)
            }
        }
    }

    pub fn inverse_lip_const(&self) -> f64 {
        inverse_lip_const(self)
    }
}

/// Upper bound θ_t on the largest eigenvalue of ∇² log P_t e^{−W} on ℝᵈ:
/// θ_t = L e^{−κt} (5L + 5/√t + K t / 2). Diverges like t^{−1/2} at 0.
pub fn theta_euclidean(t: f64, l: f64, kappa: f64, k3: f64) -> f64 {
    assert!(t > 0.0, "theta profiles need t > 0");
    l * (-kappa * t).exp() * (5.0 * l + 5.0 / t.sqrt() + 0.5 * k3 * t)
}

/// exp(∫₀^∞ θ_t dt) on ℝᵈ. Tight: exp(5L²/κ + 5√π L/√κ + LK/(2κ²));
/// stated: exp(10 (L/√κ + L²/κ + LK/κ²)).
pub fn lip_const_euclidean(l: f64, kappa: f64, k3: f64, form: ConstantForm) -> f64 {
    match form {
        ConstantForm::Tight => {
            (5.0 * l * l / kappa + 5.0 * SQRT_PI * l / kappa.sqrt()
                + 0.5 * l * k3 / (kappa * kappa))
                .exp()
        }
        ConstantForm::Stated => {
            (10.0 * (l / kappa.sqrt() + l * l / kappa + l * k3 / (kappa * kappa))).exp()
        }
    }
}

/// Decay profile on 𝕊ⁿ⁻¹ ⊂ ℝⁿ:
/// θ_t = 12 (L + L²/√(n−2)) e^{−(n−2)t} (1/√t + 1).
pub fn theta_sphere(t: f64, l: f64, ambient_dim: usize) -> f64 {
    assert!(t > 0.0, "theta profiles need t > 0");
    assert!(ambient_dim >= 3);
    let m = ambient_dim as f64 - 2.0;
    12.0 * (l + l * l / m.sqrt()) * (-m * t).exp() * (1.0 / t.sqrt() + 1.0)
}

/// exp(∫₀^∞ θ_t dt) on the sphere. Tight:
/// exp(12 (L + L²/√(n−2)) (√(π/(n−2)) + 1/(n−2)));
/// stated: exp(35 (L/√(n−2) + L²/(n−2))).
pub fn lip_const_sphere(l: f64, ambient_dim: usize, form: ConstantForm) -> f64 {
    assert!(ambient_dim >= 3);
    let m = ambient_dim as f64 - 2.0;
    match form {
        ConstantForm::Tight => {
            (12.0 * (l + l * l / m.sqrt()) * ((std::f64::consts::PI / m).sqrt() + 1.0 / m)).exp()
        }
        ConstantForm::Stated => (35.0 * (l / m.sqrt() + l * l / m)).exp(),
    }
}

/// Decay profile in the general setting:
/// θ_t = L e^{−κt} [ (rate(t) + riem/√κ) e^{L²(1−e^{−2κt})/(2κ)} + β/κ ]
/// with rate(t) = √κ/√(e^{2κt}−1) (`Proof`) or √κ/√(e^{κt}−1) (`Statement`).
pub fn theta_manifold(
    t: f64,
    l: f64,
    kappa: f64,
    riem: f64,
    beta: f64,
    variant: ManifoldThetaVariant,
) -> f64 {
    assert!(t > 0.0, "theta profiles need t > 0");
    let rate = match variant {
        ManifoldThetaVariant::Proof => kappa.sqrt() / ((2.0 * kappa * t).exp_m1()).sqrt(),
        ManifoldThetaVariant::Statement => kappa.sqrt() / ((kappa * t).exp_m1()).sqrt(),
    };
    let holder = (l * l * (1.0 - (-2.0 * kappa * t).exp()) / (2.0 * kappa)).exp();
    l * (-kappa * t).exp() * ((rate + riem / kappa.sqrt()) * holder + beta / kappa)
}

/// Headline Lipschitz constant in the general setting (envelope form):
/// exp( L e^{L²/(2κ)} (1/√κ + riem/κ^{3/2}) + Lβ/κ² ).
pub fn lip_const_manifold(l: f64, kappa: f64, riem: f64, beta: f64) -> f64 {
    let env = (l * l / (2.0 * kappa)).exp();
    (l * env * (1.0 / kappa.sqrt() + riem / kappa.powf(1.5)) + l * beta / (kappa * kappa)).exp()
}

/// Lower decay profile ℓ_t for −∇² log P_t e^{−W}: ℓ_t = θ_t + L² e^{−2κ_eff t}.
pub fn ell_profile(setting: &Setting, t: f64) -> f64 {
    let l = setting.lip();
    setting.theta(t) + l * l * (-2.0 * setting.kappa_eff() * t).exp()
}

/// Lipschitz constant of the inverse transport direction, exp(∫₀^∞ ℓ_t dt),
/// in stated (headline) form.
pub fn inverse_lip_const(setting: &Setting) -> f64 {
    match *setting {
        Setting::Euclidean { l, kappa, k3 } => (10.5 * l * l / kappa
            + 5.0 * SQRT_PI * l / kappa.sqrt()
            + 0.5 * l * k3 / (kappa * kappa))
            .exp(),
        Setting::Sphere { l, ambient_dim } => {
            let m = ambient_dim as f64 - 2.0;
            (35.0 * l / m.sqrt() + 35.5 * l * l / m).exp()
        }
        Setting::Manifold { l, kappa, riem, beta, .. } => {
            let env = (l * l / (2.0 * kappa)).exp();
            (l * env * (1.0 / kappa.sqrt() + riem / kappa.powf(1.5))
                + l * beta / (kappa * kappa)
                + l * l / (2.0 * kappa))
                .exp()
        }
    }
}

/// Gaussian isoperimetric profile I(p) = φ(Φ⁻¹(p)), with I(0) = I(1) = 0.
pub fn gaussian_isoperimetric_profile(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    norm_pdf(norm_ppf(p))
}

/// Largest derivative any 1-Lipschitz-exponent transport bound must allow:
/// the map for W = −L|x| on the κ = 1 Gaussian has sup T' ≥ e^{L²/2}.
pub fn sharpness_lower_bound(l: f64) -> f64 {
    (0.5 * l * l).exp()
}

/// ∫₀^∞ θ_t dt by adaptive quadrature. The substitution t = s² removes the
/// inverse-square-root singularity at t = 0; the upper cutoff S = 12/√κ_eff
/// leaves a tail below e^{−144}.
pub fn integrate_theta(setting: &Setting, tol: f64) -> Result<f64> {
    integrate_profile(setting, tol, false)
}

/// ∫₀^∞ ℓ_t dt by the same scheme.
pub fn integrate_ell(setting: &Setting, tol: f64) -> Result<f64> {
    integrate_profile(setting, tol, true)
}

fn integrate_profile(setting: &Setting, tol: f64, ell: bool) -> Result<f64> {
    let kappa = setting.kappa_eff();
    let s_max = 12.0 / kappa.sqrt();
    let f = |s: f64| {
        if s <= 0.0 {
            // limit of θ(s²)·2s as s → 0: finite by the 1/√t structure
            return match *setting {
                Setting::Euclidean { l, .. } => 2.0 * 5.0 * l,
                Setting::Sphere { l, ambient_dim } => {
                    let m = ambient_dim as f64 - 2.0;
                    2.0 * 12.0 * (l + l * l / m.sqrt())
                }
                Setting::Manifold { l, kappa, variant, .. } => match variant {
                    ManifoldThetaVariant::Proof => 2.0 * l * kappa.sqrt() / (2.0 * kappa).sqrt(),
                    ManifoldThetaVariant::Statement => 2.0 * l,
                },
            };
        }
        let t = s * s;
        let v = if ell { setting.ell(t) } else { setting.theta(t) };
        v * 2.0 * s
    };
    adaptive(&f, 0.0, s_max, &[], tol)
}
