//! Python bindings for the cosmon kernels.

use cosmon_core::background::principal_symbol as symbol;
use cosmon_core::modes::{exact_mode as exact, solve_mode_ode, Branch};
use cosmon_core::rays::{escape_analysis_sampled, integrate_ray as integrate, TrBox};
use cosmon_core::solver::{absorber_symbol as w_symbol, AbsorberSpec};
use cosmon_core::{specfun, BackgroundParams, Complex64, Error, ModeParams, PhasePoint};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Domain(_) | Error::Pole(_) | Error::InvalidParams(_) | Error::Precondition(_) | Error::GridMismatch(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn background(a_rot: f64) -> PyResult<BackgroundParams> {
    BackgroundParams::new(a_rot).map_err(to_py)
}

/// Bessel function of the first kind of real order.
#[pyfunction]
fn bessel_j(nu: f64, x: f64) -> PyResult<f64> {
    specfun::bessel_j(nu, x).map_err(to_py)
}

/// Modified Bessel function of the first kind of real order.
#[pyfunction]
fn bessel_i(nu: f64, x: f64) -> PyResult<f64> {
    specfun::bessel_i(nu, x).map_err(to_py)
}

#[pyfunction]
fn gamma(x: f64) -> PyResult<f64> {
    specfun::gamma(x).map_err(to_py)
}

/// Principal symbol at `(r; λ, ξ, η)`.
#[pyfunction]
#[pyo3(signature = (a_rot, r, lam, xi, eta = 0.0))]
fn principal_symbol(a_rot: f64, r: f64, lam: f64, xi: f64, eta: f64) -> PyResult<f64> {
    symbol(&background(a_rot)?, &PhasePoint::new(0.0, r, 0.0, lam, xi, eta)).map_err(to_py)
}

/// `(s, t, r, λ, ξ)`.
type RayRow = (f64, f64, f64, f64, f64);

/// Null ray through `(t, r; λ, ξ)` as a list of `(s, t, r, λ, ξ)`.
#[pyfunction]
#[pyo3(signature = (a_rot, t, r, lam, xi, s_min = -1.0, s_max = 1.0, tol = 1e-10))]
#[allow(clippy::too_many_arguments)]
fn integrate_ray(
    a_rot: f64,
    t: f64,
    r: f64,
    lam: f64,
    xi: f64,
    s_min: f64,
    s_max: f64,
    tol: f64,
) -> PyResult<Vec<RayRow>> {
    let q0 = PhasePoint { t, ..PhasePoint::radial(r, lam, xi) };
    let path = integrate(&background(a_rot)?, &q0, (s_min, s_max), tol).map_err(to_py)?;
    Ok(path.samples.iter().map(|x| (x.s, x.q.t, x.q.r, x.q.lambda, x.q.xi)).collect())
}

/// Escape time bound `T` for the box `[t_min, t_max] × [r_min, r_max]`.
#[pyfunction]
#[pyo3(signature = (a_rot, t_min, t_max, r_min, r_max, r_abs, samples_per_side = 9, tol = 1e-10))]
#[allow(clippy::too_many_arguments)]
fn escape_time(
    a_rot: f64,
    t_min: f64,
    t_max: f64,
    r_min: f64,
    r_max: f64,
    r_abs: f64,
    samples_per_side: usize,
    tol: f64,
) -> PyResult<f64> {
    let k = TrBox { t_min, t_max, r_min, r_max };
    let rep = escape_analysis_sampled(&background(a_rot)?, &k, r_abs, tol, samples_per_side).map_err(to_py)?;
    Ok(rep.t_bound)
}

/// Regular (or singular) exact radial mode sampled at `r`.
#[pyfunction]
#[pyo3(signature = (a_rot, k, m, lam, r, regular = true))]
fn exact_mode(a_rot: f64, k: i32, m: f64, lam: f64, r: Vec<f64>, regular: bool) -> PyResult<Vec<f64>> {
    let mode = ModeParams::new(k, m).map_err(to_py)?;
    let branch = if regular { Branch::Regular } else { Branch::Singular };
    let ex = exact(&background(a_rot)?, &mode, lam, branch).map_err(to_py)?;
    r.iter().map(|&x| ex.value(x).map_err(to_py)).collect()
}

/// Integrates the radial mode ODE from `(u, du/dr)` at `r_start`.
#[pyfunction]
#[pyo3(signature = (a_rot, k, m, lam, r, r_start, u0, du0, tol = 1e-12))]
#[allow(clippy::too_many_arguments)]
fn mode_ode(
    a_rot: f64,
    k: i32,
    m: f64,
    lam: f64,
    r: Vec<f64>,
    r_start: f64,
    u0: Complex64,
    du0: Complex64,
    tol: f64,
) -> PyResult<Vec<Complex64>> {
    let mode = ModeParams::new(k, m).map_err(to_py)?;
    let p = solve_mode_ode(&background(a_rot)?, &mode, lam, &r, r_start, (u0, du0), tol).map_err(to_py)?;
    Ok(p.values)
}

/// Symbol of the absorbing operator.
#[pyfunction]
#[pyo3(signature = (a_rot, r_abs, r_src, r, lam, xi, eta = 0.0))]
#[allow(clippy::too_many_arguments)]
fn absorber_symbol(a_rot: f64, r_abs: f64, r_src: f64, r: f64, lam: f64, xi: f64, eta: f64) -> PyResult<f64> {
    let spec = AbsorberSpec::new(&background(a_rot)?, r_abs, r_src).map_err(to_py)?;
    Ok(w_symbol(&spec, r, lam, xi, eta))
}

#[pymodule]
fn cosmon(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(bessel_j, m)?)?;
    m.add_function(wrap_pyfunction!(bessel_i, m)?)?;
    m.add_function(wrap_pyfunction!(gamma, m)?)?;
    m.add_function(wrap_pyfunction!(principal_symbol, m)?)?;
    m.add_function(wrap_pyfunction!(integrate_ray, m)?)?;
    m.add_function(wrap_pyfunction!(escape_time, m)?)?;
    m.add_function(wrap_pyfunction!(exact_mode, m)?)?;
    m.add_function(wrap_pyfunction!(mode_ode, m)?)?;
    m.add_function(wrap_pyfunction!(absorber_symbol, m)?)?;
    Ok(())
}
