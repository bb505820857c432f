//! Python bindings: exact 1D and sphere oracles, the ODE transport flow,
//! closed-form constants, and the path-sampled Hessian estimators.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use transport::bounds::{self, ConstantForm, Setting};
use transport::flow::{self, FlowDirection, VelocityBackend};
use transport::geometry::Space;
use transport::measures::{Perturbation, SourceMeasure};
use transport::semigroup::{
    est_hess_log_pt_euclidean, est_hess_log_pt_sphere, martingale_tail_sim, meridian_point,
    McConfig,
};

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn perturbation_1d(family: &str, coeff: f64, eps: f64) -> PyResult<Perturbation> {
    let sp = Space::euclidean(1).map_err(err)?;
    Ok(match family {
        "zero" => Perturbation::zero(sp),
        "linear" => Perturbation::linear(sp, vec![coeff]).map_err(err)?,
        "abs" => Perturbation::abs(sp, coeff),
        "smoothed-abs" => Perturbation::smoothed_abs(sp, coeff, eps).map_err(err)?,
        other => {
            return Err(PyValueError::new_err(format!(
                "family must be zero|linear|abs|smoothed-abs, got {other:?}"
            )))
        }
    })
}

/// Exact 1D oracle for a Gaussian source with density exponent κ|x|²/2 and a
/// Lipschitz perturbation of the target.
#[pyclass(name = "Oracle1D")]
struct PyOracle1D {
    inner: transport::oracle::Oracle1D,
}

#[pymethods]
impl PyOracle1D {
    #[new]
    #[pyo3(signature = (kappa, family, coeff, eps = 1e-3))]
    fn new(kappa: f64, family: &str, coeff: f64, eps: f64) -> PyResult<Self> {
        let w = perturbation_1d(family, coeff, eps)?;
        Ok(Self { inner: transport::oracle::Oracle1D::new(kappa, w).map_err(err)? })
    }

    fn pt(&self, t: f64, x: f64) -> PyResult<f64> {
        self.inner.quad_pt(t, x).map_err(err)
    }

    fn grad_log(&self, t: f64, x: f64) -> PyResult<f64> {
        Ok(self.inner.log_derivs(t, x).map_err(err)?.0)
    }

    fn hess_log(&self, t: f64, x: f64) -> PyResult<f64> {
        self.inner.quad_hess_log_pt(t, x).map_err(err)
    }

    fn cdf_source(&self, x: f64) -> f64 {
        self.inner.cdf_mu(x)
    }

    fn cdf_target(&self, x: f64) -> PyResult<f64> {
        self.inner.cdf_nu(x).map_err(err)
    }

    fn monotone_map(&self, x: f64) -> PyResult<f64> {
        self.inner.monotone_map(x).map_err(err)
    }

    fn monotone_map_deriv(&self, x: f64) -> PyResult<f64> {
        self.inner.monotone_map_deriv(x).map_err(err)
    }

    fn reverse_holder_margin(&self, t: f64, x: f64) -> PyResult<f64> {
        self.inner.reverse_holder_margin(t, x).map_err(err)
    }

    fn isoperimetry_margins(&self, m_const: f64, grid: Vec<f64>) -> PyResult<Vec<f64>> {
        self.inner.isoperimetry_check(m_const, &grid).map_err(err)
    }
}

/// Spectral oracle on the unit 2-sphere for the height perturbation a·x₃.
#[pyclass(name = "SphereOracle")]
struct PySphereOracle {
    inner: transport::oracle::SphereOracle,
}

#[pymethods]
impl PySphereOracle {
    #[new]
    fn new(a: f64) -> PyResult<Self> {
        Ok(Self { inner: transport::oracle::SphereOracle::new(a).map_err(err)? })
    }

    fn pt(&self, t: f64, theta: f64) -> f64 {
        self.inner.spectral_pt(t, theta)
    }

    fn grad_log(&self, t: f64, theta: f64) -> f64 {
        self.inner.spectral_grad_log(t, theta)
    }

    fn hess_log(&self, t: f64, theta: f64) -> f64 {
        self.inner.spectral_hess_log(t, theta)
    }

    fn reverse_holder_margin(&self, t: f64, theta: f64) -> PyResult<f64> {
        self.inner.reverse_holder_margin(t, theta).map_err(err)
    }
}

/// The ODE transport pair: `transport` maps the source onto the target
/// (inverse flow), `spread` is its inverse (forward flow). Both return
/// (image, jacobian).
#[pyclass(name = "TransportFlow")]
struct PyTransportFlow {
    backend: VelocityBackend,
    tau: f64,
    n_steps: usize,
}

#[pymethods]
impl PyTransportFlow {
    #[new]
    #[pyo3(signature = (kappa, family, coeff, eps = 1e-3, tau = 8.0, n_steps = 800, oracle_tol = 1e-9))]
    fn new(
        kappa: f64,
        family: &str,
        coeff: f64,
        eps: f64,
        tau: f64,
        n_steps: usize,
        oracle_tol: f64,
    ) -> PyResult<Self> {
        let w = perturbation_1d(family, coeff, eps)?;
        let oracle = transport::oracle::Oracle1D::with_tol(kappa, w, oracle_tol).map_err(err)?;
        Ok(Self { backend: VelocityBackend::Oracle1D(oracle), tau, n_steps })
    }

    fn transport(&self, x: f64) -> PyResult<(f64, f64)> {
        let r = flow::inverse_map(&self.backend, &[x], self.tau, self.n_steps).map_err(err)?;
        Ok((r.point[0], r.jac.at(0, 0)))
    }

    fn spread(&self, x: f64) -> PyResult<(f64, f64)> {
        let r = flow::forward_map(&self.backend, &[x], self.tau, self.n_steps).map_err(err)?;
        Ok((r.point[0], r.jac.at(0, 0)))
    }

    fn transport_batch(&self, xs: Vec<f64>) -> PyResult<Vec<f64>> {
        let inputs: Vec<Vec<f64>> = xs.into_iter().map(|x| vec![x]).collect();
        let rs = flow::flow_map_batch(
            &self.backend,
            &inputs,
            self.tau,
            self.n_steps,
            FlowDirection::Inverse,
        )
        .map_err(err)?;
        Ok(rs.into_iter().map(|r| r.point[0]).collect())
    }
}

// ---------------------------------------------------------------------------
// Constants and profiles
// ---------------------------------------------------------------------------

#[pyfunction]
fn theta_euclidean(t: f64, l: f64, kappa: f64, k3: f64) -> f64 {
    bounds::theta_euclidean(t, l, kappa, k3)
}

#[pyfunction]
fn theta_sphere(t: f64, l: f64, ambient_dim: usize) -> f64 {
    bounds::theta_sphere(t, l, ambient_dim)
}

#[pyfunction]
#[pyo3(signature = (l, kappa, k3, stated = false))]
fn lip_const_euclidean(l: f64, kappa: f64, k3: f64, stated: bool) -> f64 {
    let form = if stated { ConstantForm::Stated } else { ConstantForm::Tight };
    bounds::lip_const_euclidean(l, kappa, k3, form)
}

#[pyfunction]
#[pyo3(signature = (l, ambient_dim, stated = false))]
fn lip_const_sphere(l: f64, ambient_dim: usize, stated: bool) -> f64 {
    let form = if stated { ConstantForm::Stated } else { ConstantForm::Tight };
    bounds::lip_const_sphere(l, ambient_dim, form)
}

#[pyfunction]
fn inverse_lip_const_euclidean(l: f64, kappa: f64, k3: f64) -> f64 {
    Setting::Euclidean { l, kappa, k3 }.inverse_lip_const()
}

#[pyfunction]
fn sharpness_lower_bound(l: f64) -> f64 {
    bounds::sharpness_lower_bound(l)
}

#[pyfunction]
fn gaussian_isoperimetric_profile(p: f64) -> f64 {
    bounds::gaussian_isoperimetric_profile(p)
}

// ---------------------------------------------------------------------------
// Path-sampled estimators
// ---------------------------------------------------------------------------

/// Monte Carlo ∇²log P_t e^{−W} on the line; returns (estimate, std_error).
#[pyfunction]
#[pyo3(signature = (kappa, family, coeff, x, t, n_paths, dt, seed, eps = 1e-3))]
#[allow(clippy::too_many_arguments)]
fn mc_hess_log_euclidean(
    kappa: f64,
    family: &str,
    coeff: f64,
    x: f64,
    t: f64,
    n_paths: usize,
    dt: f64,
    seed: u64,
    eps: f64,
) -> PyResult<(f64, f64)> {
    let sp = Space::euclidean(1).map_err(err)?;
    let m = SourceMeasure::gaussian(sp, kappa).map_err(err)?;
    let w = perturbation_1d(family, coeff, eps)?;
    let cfg = McConfig::new(n_paths, dt, seed);
    let est = est_hess_log_pt_euclidean(&m, &w, &[x], &[1.0], t, &cfg).map_err(err)?;
    Ok((est.hess_log, est.hess_log_se))
}

/// Monte Carlo meridian Hessian on the 2-sphere for W = a·x₃; returns
/// (estimate, std_error).
#[pyfunction]
fn mc_hess_log_sphere(
    a: f64,
    theta: f64,
    t: f64,
    n_paths: usize,
    dt: f64,
    seed: u64,
) -> PyResult<(f64, f64)> {
    let space = Space::sphere(3).map_err(err)?;
    let w = Perturbation::sphere_linear(space, a, vec![0.0, 0.0, 1.0]).map_err(err)?;
    let (x0, u) = meridian_point(theta);
    let cfg = McConfig::new(n_paths, dt, seed);
    let est = est_hess_log_pt_sphere(&space, &w, &x0, &u, t, &cfg).map_err(err)?;
    Ok((est.hess_log, est.hess_log_se))
}

/// Empirical tails of ∫₀ᵗ e^{−κs}dB_s; returns rows (δ, p_hat, margin, bound).
#[pyfunction]
fn martingale_tail(
    kappa: f64,
    t: f64,
    dt: f64,
    n_sims: usize,
    deltas: Vec<f64>,
    seed: u64,
) -> PyResult<Vec<(f64, f64, f64, f64)>> {
    let points = martingale_tail_sim(kappa, t, dt, n_sims, &deltas, seed).map_err(err)?;
    Ok(points.into_iter().map(|p| (p.delta, p.p_hat, p.margin_99, p.bound)).collect())
}

#[pymodule]
fn langevin_transport(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyOracle1D>()?;
    m.add_class::<PySphereOracle>()?;
    m.add_class::<PyTransportFlow>()?;
    m.add_function(wrap_pyfunction!(theta_euclidean, m)?)?;
    m.add_function(wrap_pyfunction!(theta_sphere, m)?)?;
    m.add_function(wrap_pyfunction!(lip_const_euclidean, m)?)?;
    m.add_function(wrap_pyfunction!(lip_const_sphere, m)?)?;
    m.add_function(wrap_pyfunction!(inverse_lip_const_euclidean, m)?)?;
    m.add_function(wrap_pyfunction!(sharpness_lower_bound, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_isoperimetric_profile, m)?)?;
    m.add_function(wrap_pyfunction!(mc_hess_log_euclidean, m)?)?;
    m.add_function(wrap_pyfunction!(mc_hess_log_sphere, m)?)?;
    m.add_function(wrap_pyfunction!(martingale_tail, m)?)?;
    Ok(())
}
