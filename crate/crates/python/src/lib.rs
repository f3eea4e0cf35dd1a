//! Python bindings. Complex vectors cross the boundary as sequences of
//! Python `complex` (numpy `complex128` arrays work too).

use cvhss::baselines::{horner_eval, mb_eval};
use cvhss::problems::{self, FastOptions, Mode};
use cvhss::transforms::Polynomial;
use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;

create_exception!(pycvhss, CvhssError, PyException, "Numerical failure inside cvhss.");

fn to_py(e: cvhss::Error) -> PyErr {
    use cvhss::Error::*;
    match e {
        DimensionMismatch { .. } | NonFinite(_) | DuplicateKnots(..) | InvalidParameter(_) | NotPowerOfTwo(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => CvhssError::new_err(e.to_string()),
    }
}

fn options(xi: f64, dense: bool) -> FastOptions {
    FastOptions { xi, mode: if dense { Mode::Dense } else { Mode::FastIfCv }, ..FastOptions::default() }
}

/// Values of the polynomial with coefficients `coeffs` (constant term
/// first) at `knots`.
#[pyfunction]
#[pyo3(signature = (coeffs, knots, xi = 1e-12, dense = false))]
fn polyeval(py: Python<'_>, coeffs: Vec<Complex64>, knots: Vec<Complex64>, xi: f64, dense: bool) -> PyResult<Vec<Complex64>> {
    py.detach(|| problems::polyeval_fast(&Polynomial::from_vec(coeffs), &knots, &options(xi, dense)))
        .map(|v| v.into_inner())
        .map_err(to_py)
}

/// Coefficients of the interpolant of `values` at distinct `knots`.
#[pyfunction]
#[pyo3(signature = (values, knots, xi = 1e-12, dense = false))]
fn polyinterp(py: Python<'_>, values: Vec<Complex64>, knots: Vec<Complex64>, xi: f64, dense: bool) -> PyResult<Vec<Complex64>> {
    py.detach(|| problems::polyinterp_fast(&values, &knots, &options(xi, dense)))
        .map(|fit| fit.poly.coeffs().to_vec())
        .map_err(to_py)
}

/// `v_i = Σ_j u_j / (s_i − t_j)`.
#[pyfunction]
#[pyo3(signature = (s, t, u, xi = 1e-12, dense = false))]
fn cauchy_matvec(
    py: Python<'_>,
    s: Vec<Complex64>,
    t: Vec<Complex64>,
    u: Vec<Complex64>,
    xi: f64,
    dense: bool,
) -> PyResult<Vec<Complex64>> {
    py.detach(|| problems::cauchy_matvec(&s, &t, &u, &options(xi, dense))).map(|v| v.into_inner()).map_err(to_py)
}

/// Solves `Σ_j u_j / (s_i − t_j) = v_i` for `u`.
#[pyfunction]
#[pyo3(signature = (s, t, v, xi = 1e-12, dense = false))]
fn cauchy_solve(
    py: Python<'_>,
    s: Vec<Complex64>,
    t: Vec<Complex64>,
    v: Vec<Complex64>,
    xi: f64,
    dense: bool,
) -> PyResult<Vec<Complex64>> {
    py.detach(|| problems::cauchy_solve(&s, &t, &v, &options(xi, dense))).map(|u| u.into_inner()).map_err(to_py)
}

/// Horner's rule.
#[pyfunction]
fn horner(coeffs: Vec<Complex64>, knots: Vec<Complex64>) -> Vec<Complex64> {
    horner_eval(&Polynomial::from_vec(coeffs), &knots).into_inner()
}

/// Remainder-tree evaluation; loses accuracy quickly with the degree.
#[pyfunction]
fn remainder_tree_eval(coeffs: Vec<Complex64>, knots: Vec<Complex64>) -> Vec<Complex64> {
    mb_eval(&Polynomial::from_vec(coeffs), &knots).into_inner()
}

#[pymodule]
fn pycvhss(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("CvhssError", m.py().get_type::<CvhssError>())?;
    m.add_function(wrap_pyfunction!(polyeval, m)?)?;
    m.add_function(wrap_pyfunction!(polyinterp, m)?)?;
    m.add_function(wrap_pyfunction!(cauchy_matvec, m)?)?;
    m.add_function(wrap_pyfunction!(cauchy_solve, m)?)?;
    m.add_function(wrap_pyfunction!(horner, m)?)?;
    m.add_function(wrap_pyfunction!(remainder_tree_eval, m)?)?;
    Ok(())
}
