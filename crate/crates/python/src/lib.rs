//! Python bindings: datasets, fits, the test procedures, the shape
//! constants and the simulation harness.

use std::collections::HashMap;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use bsreg_core::cumulants::{self, AlphaConstants};
use bsreg_core::harness::{self, TableFormat};
use bsreg_core::inference::{self, Method, TestOptions};
use bsreg_core::model::{self, CsvOptions};
use bsreg_core::nalgebra::{DMatrix, DVector};
use bsreg_core::specfun;
use bsreg_core::Error;

fn to_py(e: Error) -> PyErr {
    match e.exit_code() {
        3 => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn method(name: &str) -> PyResult<Method> {
    name.parse().map_err(to_py)
}

/// Responses (log-lifetimes) and a design matrix.
#[pyclass(module = "bsreg")]
#[derive(Clone)]
struct Dataset {
    inner: model::Dataset,
    #[pyo3(get)]
    names: Vec<String>,
}

#[pymethods]
impl Dataset {
    /// `x` is a list of rows.
    #[new]
    #[pyo3(signature = (y, x, names=None))]
    fn new(y: Vec<f64>, x: Vec<Vec<f64>>, names: Option<Vec<String>>) -> PyResult<Self> {
        let n = x.len();
        let p = x.first().map_or(0, Vec::len);
        if x.iter().any(|r| r.len() != p) {
            return Err(PyValueError::new_err("rows of x have different lengths"));
        }
        let names = names.unwrap_or_else(|| (1..=p).map(|j| format!("b{j}")).collect());
        if names.len() != p {
            return Err(PyValueError::new_err(format!("{} names for {p} columns", names.len())));
        }
        let xm = DMatrix::from_fn(n, p, |i, j| x[i][j]);
        let inner = model::Dataset::new(DVector::from_vec(y), xm).map_err(to_py)?;
        Ok(Self { inner, names })
    }

    /// Reads a CSV file: response first, covariates after it.
    #[staticmethod]
    #[pyo3(signature = (path, take_logs=false, intercept=false))]
    fn from_csv(path: &str, take_logs: bool, intercept: bool) -> PyResult<Self> {
        let (inner, names) = model::Dataset::from_csv(path, &CsvOptions { take_logs, intercept }).map_err(to_py)?;
        Ok(Self { inner, names })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn p(&self) -> usize {
        self.inner.p()
    }

    #[getter]
    fn y(&self) -> Vec<f64> {
        self.inner.y().iter().copied().collect()
    }

    #[getter]
    fn x(&self) -> Vec<Vec<f64>> {
        let x = self.inner.x();
        (0..x.nrows()).map(|i| x.row(i).iter().copied().collect()).collect()
    }

    /// Maximum-likelihood fit; raises `RuntimeError` if it does not converge.
    fn fit(&self) -> PyResult<FitResult> {
        let f = model::fit(&self.inner, None).and_then(|f| f.require()).map_err(to_py)?;
        let info = model::expected_info(&f.theta, &self.inner).map_err(to_py)?;
        let cov = info
            .beta
            .try_inverse()
            .ok_or_else(|| PyRuntimeError::new_err("information matrix is singular"))?;
        Ok(FitResult {
            beta: f.theta.beta.iter().copied().collect(),
            alpha: f.theta.alpha,
            std_errors: (0..cov.nrows()).map(|j| cov[(j, j)].sqrt()).collect(),
            alpha_std_error: (1.0 / info.alpha).sqrt(),
            loglik: f.loglik,
            iterations: f.iterations,
        })
    }

    /// Tests `null` ("b3=0,b4=0" or "alpha=1.0") with `method`
    /// (lr, sr, sr-star, sh or boot).
    #[pyo3(signature = (null, method="sr-star", levels=vec![0.10, 0.05], bootstrap_b=600, seed=0))]
    fn test(&self, null: &str, method: &str, levels: Vec<f64>, bootstrap_b: usize, seed: u64) -> PyResult<TestResult> {
        let m = self::method(method)?;
        let spec = inference::parse_null(null, &self.names).map_err(to_py)?;
        let r = inference::test_null(&self.inner, &spec, m, &TestOptions { levels, bootstrap_b, seed }).map_err(to_py)?;
        Ok(TestResult {
            method: r.method.name().to_string(),
            statistic: r.statistic,
            corrected: r.corrected,
            df: r.df,
            p_value: r.p_value,
            critical_values: r.critical_values,
            decisions: r.decisions,
            a: r.a.total().to_vec(),
            restricted_beta: r.theta_restricted.beta.iter().copied().collect(),
            restricted_alpha: r.theta_restricted.alpha,
            diagnostics: r.diagnostics,
        })
    }

    fn __repr__(&self) -> String {
        format!("Dataset(n={}, p={}, names={:?})", self.inner.n(), self.inner.p(), self.names)
    }
}

#[pyclass(module = "bsreg", frozen, get_all)]
struct FitResult {
    beta: Vec<f64>,
    alpha: f64,
    std_errors: Vec<f64>,
    alpha_std_error: f64,
    loglik: f64,
    iterations: usize,
}

#[pymethods]
impl FitResult {
    fn __repr__(&self) -> String {
        format!("FitResult(beta={:?}, alpha={}, loglik={})", self.beta, self.alpha, self.loglik)
    }
}

#[pyclass(module = "bsreg", frozen, get_all)]
struct TestResult {
    method: String,
    statistic: f64,
    corrected: Option<f64>,
    df: usize,
    p_value: f64,
    critical_values: Vec<(f64, f64)>,
    decisions: Vec<(f64, bool)>,
    /// `[A1, A2, A3]`.
    a: Vec<f64>,
    restricted_beta: Vec<f64>,
    restricted_alpha: f64,
    diagnostics: Vec<String>,
}

#[pymethods]
impl TestResult {
    fn __repr__(&self) -> String {
        format!(
            "TestResult(method={}, statistic={}, corrected={:?}, p_value={})",
            self.method, self.statistic, self.corrected, self.p_value
        )
    }
}

/// One simulation cell. Settings use the keys of the config-file format.
#[pyclass(module = "bsreg")]
#[derive(Clone)]
struct ExperimentConfig {
    inner: harness::ExperimentConfig,
}

#[pymethods]
impl ExperimentConfig {
    /// Keyword settings override the defaults, e.g.
    /// `ExperimentConfig(n=25, p=7, tests="lr,sr,sr*")`.
    #[new]
    #[pyo3(signature = (**settings))]
    fn new(settings: Option<HashMap<String, Bound<'_, PyAny>>>) -> PyResult<Self> {
        let mut inner = harness::ExperimentConfig::default();
        for (k, v) in settings.unwrap_or_default() {
            let text = match v.extract::<Vec<f64>>() {
                Ok(list) => list.iter().map(f64::to_string).collect::<Vec<_>>().join(","),
                Err(_) => v.str()?.to_string(),
            };
            inner.set(&k, &text).map_err(to_py)?;
        }
        inner.validate().map_err(to_py)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_config_str(text: &str) -> PyResult<Self> {
        let inner = harness::ExperimentConfig::from_config_str(text).map_err(to_py)?;
        Ok(Self { inner })
    }

    fn set(&mut self, key: &str, value: &str) -> PyResult<()> {
        self.inner.set(key, value).map_err(to_py)
    }

    fn to_config_string(&self) -> String {
        self.inner.to_config_string()
    }

    /// Runs every replication (in parallel) and returns the tabulation.
    fn run(&self, py: Python<'_>) -> PyResult<CellResult> {
        let cfg = self.inner.clone();
        let r = py.allow_threads(move || harness::run_experiment(&cfg)).map_err(to_py)?;
        Ok(CellResult { inner: r })
    }

    fn __repr__(&self) -> String {
        format!("ExperimentConfig({})", self.inner.describe())
    }
}

#[pyclass(module = "bsreg", frozen)]
struct CellResult {
    inner: harness::CellResult,
}

#[pymethods]
impl CellResult {
    #[getter]
    fn replications(&self) -> usize {
        self.inner.replications
    }

    #[getter]
    fn failed(&self) -> usize {
        self.inner.failed
    }

    /// `(test, level, rate, mc_se)` with rates as fractions.
    #[getter]
    fn rates(&self) -> Vec<(String, f64, f64, f64)> {
        self.inner.rates.iter().map(|r| (r.method.name().to_string(), r.level, r.rate, r.se)).collect()
    }

    /// `{test: (mean, variance, skewness, kurtosis)}`.
    #[getter]
    fn moments(&self) -> HashMap<String, (f64, f64, f64, f64)> {
        self.inner
            .moments
            .iter()
            .map(|(m, v)| (m.name().to_string(), (v.mean, v.variance, v.skewness, v.kurtosis)))
            .collect()
    }

    #[pyo3(signature = (format="text"))]
    fn table(&self, format: &str) -> PyResult<String> {
        let fmt = match format {
            "text" => TableFormat::Text,
            "csv" => TableFormat::Csv,
            other => return Err(PyValueError::new_err(format!("unknown format '{other}'"))),
        };
        Ok(harness::emit_table(std::slice::from_ref(&self.inner), fmt))
    }
}

/// Cells of a published table ("1".."5" or "alpha").
#[pyfunction]
#[pyo3(signature = (table, replications=harness::DEFAULT_REPLICATIONS, seed=2010))]
fn table_cells(table: &str, replications: usize, seed: u64) -> PyResult<Vec<ExperimentConfig>> {
    let p = harness::table_preset(table, replications, seed).map_err(to_py)?;
    Ok(p.cells.into_iter().map(|inner| ExperimentConfig { inner }).collect())
}

/// Runs a table and compares it with the published values. Returns the
/// cell results and `(label, expected, observed, tolerance, passed)` rows.
#[pyfunction]
#[pyo3(signature = (table, replications=harness::DEFAULT_REPLICATIONS, seed=2010))]
#[allow(clippy::type_complexity)]
fn verify_table(
    py: Python<'_>,
    table: &str,
    replications: usize,
    seed: u64,
) -> PyResult<(Vec<CellResult>, Vec<(String, f64, f64, f64, bool)>)> {
    let p = harness::table_preset(table, replications, seed).map_err(to_py)?;
    let results = py
        .allow_threads(|| p.cells.iter().map(harness::run_experiment).collect::<Result<Vec<_>, _>>())
        .map_err(to_py)?;
    let checks = harness::verify(&p, &results)
        .into_iter()
        .map(|c| (c.label, c.expected, c.observed, c.tolerance, c.pass))
        .collect();
    Ok((results.into_iter().map(|inner| CellResult { inner }).collect(), checks))
}

#[pyfunction]
fn a0(alpha: f64) -> PyResult<f64> {
    cumulants::a0(alpha).map_err(to_py)
}

#[pyfunction]
fn a1(alpha: f64) -> PyResult<f64> {
    cumulants::a1(alpha).map_err(to_py)
}

/// All shape constants (`a0..a4`, `s0..s4`, `g1..g6`) by name.
#[pyfunction]
fn alpha_constants(alpha: f64) -> PyResult<HashMap<&'static str, f64>> {
    let c = AlphaConstants::new(alpha).map_err(to_py)?;
    Ok(HashMap::from([
        ("a0", c.a0),
        ("a1", c.a1),
        ("a2", c.a2),
        ("a3", c.a3),
        ("a4", c.a4),
        ("s0", c.s0),
        ("s1", c.s1),
        ("s2", c.s2),
        ("s3", c.s3),
        ("s4", c.s4),
        ("g1", c.g1),
        ("g2", c.g2),
        ("g3", c.g3),
        ("g4", c.g4),
        ("g5", c.g5),
        ("g6", c.g6),
    ]))
}

#[pyfunction]
fn chi2_sf(x: f64, k: u32) -> PyResult<f64> {
    specfun::chi2_sf(x, k).map_err(to_py)
}

#[pyfunction]
fn chi2_quantile(p: f64, k: u32) -> PyResult<f64> {
    specfun::chi2_quantile(p, k).map_err(to_py)
}

#[pymodule]
fn bsreg(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Dataset>()?;
    m.add_class::<FitResult>()?;
    m.add_class::<TestResult>()?;
    m.add_class::<ExperimentConfig>()?;
    m.add_class::<CellResult>()?;
    m.add_function(wrap_pyfunction!(table_cells, m)?)?;
    m.add_function(wrap_pyfunction!(verify_table, m)?)?;
    m.add_function(wrap_pyfunction!(a0, m)?)?;
    m.add_function(wrap_pyfunction!(a1, m)?)?;
    m.add_function(wrap_pyfunction!(alpha_constants, m)?)?;
    m.add_function(wrap_pyfunction!(chi2_sf, m)?)?;
    m.add_function(wrap_pyfunction!(chi2_quantile, m)?)?;
    Ok(())
}
