//! Python module `errexp_py`. Joint PMFs are flat row-major lists with an
//! explicit `(rows, cols)`; exact inputs are `"a/b"` strings.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use errexp::certify::{check_certificate, read_certificate_file, verify_upper_bound};
use errexp::distributions::Shape;
use errexp::exponents::{ep_of_eq as ep_estimate, eq_of_ep as eq_estimate, ExponentPair};
use errexp::hypothesis::{empirical_type, TestConfig, TestKind};
use errexp::rational::{format_rational, parse_rational, Rational};
use errexp::{Error, FinitePmf, RenyiOrder};

fn py_err(e: Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn joint(p: Vec<f64>, rows: usize, cols: usize) -> PyResult<FinitePmf> {
    FinitePmf::joint(rows, cols, p).map_err(py_err)
}

fn exact_joint(p: &[String], rows: usize, cols: usize) -> PyResult<FinitePmf> {
    let masses = p
        .iter()
        .map(|s| rational(s))
        .collect::<PyResult<Vec<_>>>()?;
    FinitePmf::from_rationals(Shape::Joint { rows, cols }, masses).map_err(py_err)
}

fn rational(s: &str) -> PyResult<Rational> {
    parse_rational(s).map_err(py_err)
}

fn flat(p: Vec<f64>) -> PyResult<FinitePmf> {
    FinitePmf::marginal(p).map_err(py_err)
}

/// `D(p‖q)` for PMFs on the same alphabet.
#[pyfunction]
fn kl_divergence(p: Vec<f64>, q: Vec<f64>) -> PyResult<f64> {
    errexp::kl_divergence(&flat(p)?, &flat(q)?).map_err(py_err)
}

/// Rényi divergence of order `alpha`.
#[pyfunction]
fn renyi_divergence(p: Vec<f64>, q: Vec<f64>, alpha: f64) -> PyResult<f64> {
    let order = RenyiOrder::new(alpha).map_err(py_err)?;
    errexp::renyi_divergence(&flat(p)?, &flat(q)?, order).map_err(py_err)
}

#[pyfunction]
fn mutual_information(p: Vec<f64>, rows: usize, cols: usize) -> PyResult<f64> {
    errexp::mutual_information(&joint(p, rows, cols)?).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (p, rows, cols, alpha, starts = 8))]
fn j_alpha(p: Vec<f64>, rows: usize, cols: usize, alpha: f64, starts: usize) -> PyResult<f64> {
    let order = RenyiOrder::new(alpha).map_err(py_err)?;
    errexp::j_alpha(&joint(p, rows, cols)?, order, starts).map_err(py_err)
}

/// `(primal, dual_lower)` for `E_P(e_q)`.
#[pyfunction]
#[pyo3(signature = (p, rows, cols, e_q, starts = 8))]
fn ep_of_eq(
    p: Vec<f64>,
    rows: usize,
    cols: usize,
    e_q: f64,
    starts: usize,
) -> PyResult<(f64, f64)> {
    let est = ep_estimate(&joint(p, rows, cols)?, e_q, starts).map_err(py_err)?;
    Ok((est.value, est.dual_lower))
}

/// `(primal, dual_lower)` for `E_Q(e_p)`.
#[pyfunction]
#[pyo3(signature = (p, rows, cols, e_p, starts = 8))]
fn eq_of_ep(
    p: Vec<f64>,
    rows: usize,
    cols: usize,
    e_p: f64,
    starts: usize,
) -> PyResult<(f64, f64)> {
    let est = eq_estimate(&joint(p, rows, cols)?, e_p, starts).map_err(py_err)?;
    Ok((est.value, est.dual_lower))
}

/// Decisions and statistics of the three tests on zero-based samples.
#[pyfunction]
fn run_tests(
    p: Vec<f64>,
    rows: usize,
    cols: usize,
    samples: Vec<(usize, usize)>,
    e_p: f64,
    e_q: f64,
    eps: f64,
) -> PyResult<Vec<(String, u8, f64)>> {
    let t = empirical_type(rows, cols, &samples).map_err(py_err)?;
    let pair = ExponentPair::new(e_p, e_q).map_err(py_err)?;
    let cfg = TestConfig::new(pair, eps, joint(p, rows, cols)?).map_err(py_err)?;
    TestKind::ALL
        .into_iter()
        .map(|k| {
            let v = k.run(&t, &cfg).map_err(py_err)?;
            Ok((k.name().to_string(), v.decision, v.statistic))
        })
        .collect()
}

/// True when the witness `r` certifies `E_P(e_q) ≤ claim`.
#[pyfunction]
#[pyo3(signature = (p, r, rows, cols, e_q, claim, bits = 256))]
fn verify_upper(
    p: Vec<String>,
    r: Vec<String>,
    rows: usize,
    cols: usize,
    e_q: &str,
    claim: &str,
    bits: u32,
) -> PyResult<bool> {
    let p = exact_joint(&p, rows, cols)?;
    let r = exact_joint(&r, rows, cols)?;
    match verify_upper_bound(&p, &r, &rational(e_q)?, &rational(claim)?, bits) {
        Ok(_) => Ok(true),
        Err(Error::Precondition(_)) => Ok(false),
        Err(e) => Err(py_err(e)),
    }
}

/// Re-verifies a certificate file and returns its kind.
#[pyfunction]
fn check_certificate_file(path: &str) -> PyResult<String> {
    let cert = read_certificate_file(path).map_err(py_err)?;
    check_certificate(&cert).map_err(py_err)?;
    Ok(cert.kind().to_string())
}

/// Masses of the 3×3 example with a non-convex trade-off, as `"a/b"`.
#[pyfunction]
fn example1_masses() -> Vec<String> {
    errexp::example1::pmf()
        .exact()
        .expect("rational example")
        .iter()
        .map(format_rational)
        .collect()
}

#[pymodule]
fn errexp_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(kl_divergence, m)?)?;
    m.add_function(wrap_pyfunction!(renyi_divergence, m)?)?;
    m.add_function(wrap_pyfunction!(mutual_information, m)?)?;
    m.add_function(wrap_pyfunction!(j_alpha, m)?)?;
    m.add_function(wrap_pyfunction!(ep_of_eq, m)?)?;
    m.add_function(wrap_pyfunction!(eq_of_ep, m)?)?;
    m.add_function(wrap_pyfunction!(run_tests, m)?)?;
    m.add_function(wrap_pyfunction!(verify_upper, m)?)?;
    m.add_function(wrap_pyfunction!(check_certificate_file, m)?)?;
    m.add_function(wrap_pyfunction!(example1_masses, m)?)?;
    Ok(())
}
