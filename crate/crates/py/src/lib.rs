//! Python bindings: `import heatvar`.

use std::sync::Arc;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use heatvar_core::experiments::{run_experiment as run_core, ExperimentConfig, RunOptions};
use heatvar_core::field_sim::{simulate_field, FieldGridSpec};
use heatvar_core::gaussian_sim::{cached_temporal_covariance, sample_path, SeedSpec};
use heatvar_core::variation::quartic_variation_of;
use heatvar_core::{kernel, stats, variation, wick, Drift, Error, ModelParams, PathKind, TimeGrid};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Domain(_) | Error::IndexOutOfRange { .. } | Error::Config { .. } | Error::Serialization(_) => {
            PyValueError::new_err(e.to_string())
        }
        Error::DegeneratePath | Error::LengthMismatch { .. } | Error::GridMismatch(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn parse_drift(s: &str) -> PyResult<Drift> {
    match s {
        "zero" => Ok(Drift::Zero),
        "cosine" => Ok(Drift::Cosine),
        "bounded_rational" | "bounded-rational" => Ok(Drift::BoundedRational),
        _ => s
            .strip_prefix("linear:")
            .and_then(|c| c.parse().ok())
            .map(|c| Drift::Linear { c })
            .ok_or_else(|| PyValueError::new_err(format!("unknown drift `{s}`"))),
    }
}

/// `6/(πθ)`, `σ_θ²` and `σ₁,θ²` as a dict.
#[pyfunction]
fn constants<'py>(py: Python<'py>, theta: f64) -> PyResult<Bound<'py, PyDict>> {
    let k = wick::asymptotic_constants(theta).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("limit", k.limit)?;
    d.set_item("sigma_theta_sq", k.sigma_theta_sq)?;
    d.set_item("sigma1_theta_sq", k.sigma1_theta_sq)?;
    Ok(d)
}

/// Exact `(E[V_N], Var[V_N])` for the linear solution.
#[pyfunction]
#[pyo3(signature = (n, theta=1.0))]
fn oracle_moments(py: Python<'_>, n: usize, theta: f64) -> PyResult<(f64, f64)> {
    py.detach(|| wick::linear_quartic_moments(n, theta)).map_err(to_py)
}

#[pyfunction]
fn isserlis_cov_quartic(a: f64, b: f64, c: f64) -> PyResult<f64> {
    wick::isserlis_cov_quartic(a, b, c).map_err(to_py)
}

#[pyfunction]
fn heat_kernel(t: f64, x: f64, theta: f64) -> PyResult<f64> {
    kernel::heat_kernel(t, x, theta).map_err(to_py)
}

#[pyfunction]
fn cov_u0(s: f64, t: f64, theta: f64) -> PyResult<f64> {
    kernel::cov_u0(s, t, theta).map_err(to_py)
}

/// `E[Δ_i u Δ_j u]` on the grid `k/N` (0-based increments).
#[pyfunction]
fn increment_cov(i: usize, j: usize, n: usize, theta: f64) -> PyResult<f64> {
    let grid = TimeGrid::new(n).map_err(to_py)?;
    kernel::increment_cov(i, j, &grid, theta).map_err(to_py)
}

#[pyfunction]
fn pniq(n: usize, i: usize, q: usize, theta: f64) -> PyResult<f64> {
    kernel::pniq(n, i, q, theta).map_err(to_py)
}

#[pyfunction]
fn pniq_quadrature(n: usize, i: usize, q: usize, theta: f64) -> PyResult<f64> {
    kernel::pniq_quadrature(n, i, q, theta).map_err(to_py)
}

#[pyfunction]
fn quartic_variation(values: Vec<f64>) -> f64 {
    quartic_variation_of(&values)
}

#[pyfunction]
fn theta_hat(v: f64) -> PyResult<f64> {
    variation::theta_hat(v).map_err(to_py)
}

#[pyfunction]
fn standardize(v: f64, n: usize, theta: f64) -> PyResult<f64> {
    variation::standardize(v, n, theta).map_err(to_py)
}

/// All statistics of one observed path `[u(0), …, u(1)]` as a dict.
#[pyfunction]
fn estimate<'py>(py: Python<'py>, values: Vec<f64>, theta: f64) -> PyResult<Bound<'py, PyDict>> {
    let path = heatvar_core::PathSample::new(values, PathKind::LinearExact).map_err(to_py)?;
    let r = variation::EstimateRecord::from_path(&path, theta, None).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("n", r.n)?;
    d.set_item("v", r.v)?;
    d.set_item("u", r.u)?;
    d.set_item("theta_hat", r.theta_hat)?;
    d.set_item("theta_bar", r.theta_bar)?;
    Ok(d)
}

#[pyfunction]
fn ks_to_normal(samples: Vec<f64>, mu: f64, sigma: f64) -> PyResult<f64> {
    stats::ks_to_normal(&samples, mu, sigma).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (samples, mu, sigma, k=1000))]
fn wasserstein1_to_normal(samples: Vec<f64>, mu: f64, sigma: f64, k: usize) -> PyResult<f64> {
    stats::wasserstein1_to_normal(&samples, mu, sigma, k).map_err(to_py)
}

#[pyfunction]
fn distance_correlation(xs: Vec<f64>, ys: Vec<f64>) -> PyResult<f64> {
    stats::distance_correlation(&xs, &ys).map_err(to_py)
}

/// Factorized temporal covariance of `(u(i/N))_{i=1..N}`.
#[pyclass(name = "TemporalCovariance", frozen)]
struct PyTemporalCovariance {
    inner: Arc<heatvar_core::TemporalCovariance>,
}

#[pymethods]
impl PyTemporalCovariance {
    #[new]
    #[pyo3(signature = (n, theta=1.0))]
    fn new(py: Python<'_>, n: usize, theta: f64) -> PyResult<Self> {
        let inner = py.detach(|| cached_temporal_covariance(n, theta)).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn theta(&self) -> f64 {
        self.inner.theta()
    }

    #[getter]
    fn jitter(&self) -> f64 {
        self.inner.jitter()
    }

    /// Covariance entry for 1-based times `i/N`, `j/N`.
    fn entry(&self, i: usize, j: usize) -> PyResult<f64> {
        if i == 0 || j == 0 || i > self.inner.n() || j > self.inner.n() {
            return Err(PyValueError::new_err("indices must lie in 1..=N"));
        }
        Ok(self.inner.entry(i, j))
    }

    /// One exact path `[0, u(1/N), …, u(1)]`.
    #[pyo3(signature = (seed, replicate=0))]
    fn sample(&self, seed: u64, replicate: u64) -> Vec<f64> {
        sample_path(&self.inner, SeedSpec::new(seed, replicate)).into_values()
    }

    fn __repr__(&self) -> String {
        format!("TemporalCovariance(n={}, theta={})", self.inner.n(), self.inner.theta())
    }
}

/// One path: exact for zero drift, the default finite-difference grid
/// otherwise.
#[pyfunction]
#[pyo3(signature = (n, theta=1.0, seed=0, replicate=0, drift="zero"))]
fn simulate_path(py: Python<'_>, n: usize, theta: f64, seed: u64, replicate: u64, drift: &str) -> PyResult<Vec<f64>> {
    let params = ModelParams::new(theta, parse_drift(drift)?).map_err(to_py)?;
    let seed = SeedSpec::new(seed, replicate);
    py.detach(|| {
        if params.drift().is_zero() {
            let cov = cached_temporal_covariance(n, theta)?;
            Ok(sample_path(&cov, seed).into_values())
        } else {
            Ok(simulate_field(&FieldGridSpec::default_for(n), &params, seed)?.into_values())
        }
    })
    .map_err(to_py)
}

/// Runs a TOML experiment config; returns `(csv, metadata_json)`.
#[pyfunction]
#[pyo3(signature = (config_toml, workers=None))]
fn run_experiment(py: Python<'_>, config_toml: &str, workers: Option<usize>) -> PyResult<(String, String)> {
    let cfg = ExperimentConfig::from_toml_str(config_toml).map_err(to_py)?;
    py.detach(|| {
        let report = run_core(&cfg, RunOptions { workers })?;
        Ok((report.to_csv_string()?, report.metadata_json()?))
    })
    .map_err(to_py)
}

#[pymodule]
fn heatvar(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyTemporalCovariance>()?;
    m.add_function(wrap_pyfunction!(constants, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_moments, m)?)?;
    m.add_function(wrap_pyfunction!(isserlis_cov_quartic, m)?)?;
    m.add_function(wrap_pyfunction!(heat_kernel, m)?)?;
    m.add_function(wrap_pyfunction!(cov_u0, m)?)?;
    m.add_function(wrap_pyfunction!(increment_cov, m)?)?;
    m.add_function(wrap_pyfunction!(pniq, m)?)?;
    m.add_function(wrap_pyfunction!(pniq_quadrature, m)?)?;
    m.add_function(wrap_pyfunction!(quartic_variation, m)?)?;
    m.add_function(wrap_pyfunction!(theta_hat, m)?)?;
    m.add_function(wrap_pyfunction!(standardize, m)?)?;
    m.add_function(wrap_pyfunction!(estimate, m)?)?;
    m.add_function(wrap_pyfunction!(ks_to_normal, m)?)?;
    m.add_function(wrap_pyfunction!(wasserstein1_to_normal, m)?)?;
    m.add_function(wrap_pyfunction!(distance_correlation, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_path, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
