//! Python bindings. Matrices are accepted as sequences of rows (lists or
//! 2-D numpy arrays); coefficient vectors come back as lists. Long-running
//! calls release the GIL.

use nalgebra::{DMatrix, DVector};
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use tlasso::regpath::lambda_max_or_fallback;
use tlasso::sim::{run_classification_drift, run_concept_drift, run_transfer, DriftScenario, Method, RunSpec, ScenarioKind};
use tlasso::theory::bounds::{error_bound as bound, BoundInputs};
use tlasso::theory::verify::{run_suite, Suite};
use tlasso::{Coefficients, CvSpec, FitConfig, Init, Loss, PathSpec, PenaltySpec, ThresholdParams};

fn py_err(e: tlasso::Error) -> PyErr {
    match e {
        tlasso::Error::Io { .. } => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn json_str(v: &impl serde::Serialize) -> String {
    serde_json::to_string(v).expect("report serializes")
}

fn parse_loss(loss: &str) -> PyResult<Loss> {
    match loss {
        "squared" => Ok(Loss::Squared),
        "logistic" => Ok(Loss::Logistic),
        other => Err(PyValueError::new_err(format!("unknown loss `{other}` (squared or logistic)"))),
    }
}

fn matrix(rows: Vec<Vec<f64>>) -> PyResult<DMatrix<f64>> {
    let n = rows.len();
    let p = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != p) {
        return Err(PyValueError::new_err("all rows of x must have the same length"));
    }
    Ok(DMatrix::from_fn(n, p, |i, j| rows[i][j]))
}

fn tilde_or_zeros(tilde: Option<Vec<f64>>, p: usize) -> Coefficients {
    match tilde {
        Some(t) => Coefficients::new(DVector::from_vec(t)),
        None => Coefficients::zeros(p),
    }
}

/// Design matrix and response; no intercept column.
#[pyclass(name = "Dataset", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyDataset {
    inner: tlasso::Dataset,
}

#[pymethods]
impl PyDataset {
    #[new]
    fn new(x: Vec<Vec<f64>>, y: Vec<f64>) -> PyResult<Self> {
        let inner = tlasso::Dataset::new(matrix(x)?, DVector::from_vec(y)).map_err(py_err)?;
        Ok(PyDataset { inner })
    }

    /// Reads a headered numeric CSV; `response` names the target column.
    #[staticmethod]
    fn from_csv(path: &str, response: &str) -> PyResult<Self> {
        let inner = tlasso::load_csv(std::path::Path::new(path), response).map_err(py_err)?;
        Ok(PyDataset { inner })
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

    /// Centers and scales columns to `‖x_j‖²/n = 1` and centers `y`.
    /// Returns the standardized data and the map back to the raw scale.
    fn standardize(&self) -> PyResult<(PyDataset, PyStandardizer)> {
        let (d, st) = tlasso::standardize(&self.inner).map_err(py_err)?;
        Ok((PyDataset { inner: d }, PyStandardizer { inner: st }))
    }

    fn __repr__(&self) -> String {
        format!("Dataset(n={}, p={})", self.inner.n(), self.inner.p())
    }
}

#[pyclass(name = "Standardizer", frozen)]
struct PyStandardizer {
    inner: tlasso::Standardizer,
}

#[pymethods]
impl PyStandardizer {
    /// Raw-scale coefficients to the standardized scale.
    fn to_standardized(&self, beta: Vec<f64>) -> PyResult<Vec<f64>> {
        let c = self.inner.to_standardized(&Coefficients::new(DVector::from_vec(beta))).map_err(py_err)?;
        Ok(c.beta.iter().copied().collect())
    }

    /// Standardized coefficients to the raw scale, as `(beta, intercept)`.
    fn to_raw(&self, beta: Vec<f64>) -> PyResult<(Vec<f64>, f64)> {
        let c = tlasso::destandardize(&Coefficients::new(DVector::from_vec(beta)), &self.inner).map_err(py_err)?;
        Ok((c.beta.iter().copied().collect(), c.intercept))
    }
}

#[pyclass(name = "FitResult", frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
struct PyFitResult {
    beta: Vec<f64>,
    objective: f64,
    sweeps_used: usize,
    kkt_residual: f64,
    converged: bool,
}

#[pymethods]
impl PyFitResult {
    fn __repr__(&self) -> String {
        format!(
            "FitResult(objective={:.6}, sweeps_used={}, kkt_residual={:.2e}, converged={})",
            self.objective, self.sweeps_used, self.kkt_residual, self.converged
        )
    }
}

impl From<&tlasso::FitResult> for PyFitResult {
    fn from(f: &tlasso::FitResult) -> Self {
        PyFitResult {
            beta: f.coefficients.beta.iter().copied().collect(),
            objective: f.objective,
            sweeps_used: f.sweeps_used,
            kkt_residual: f.kkt_residual,
            converged: f.converged,
        }
    }
}

fn config(loss: &str, tol: f64, max_sweeps: usize) -> PyResult<FitConfig> {
    let cfg = FitConfig::default().with_loss(parse_loss(loss)?).with_tol(tol).with_max_sweeps(max_sweeps);
    cfg.validate().map_err(py_err)?;
    Ok(cfg)
}

/// The scalar update `argmin_β ½(β − z)² + λ(α|β| + (1 − α)|β − b|)`.
#[pyfunction]
fn transfer_threshold(z: f64, lam: f64, alpha: f64, b: f64) -> PyResult<f64> {
    PenaltySpec::new(lam, alpha).map_err(py_err)?;
    Ok(tlasso::transfer_threshold(z, ThresholdParams::from_penalty(lam, alpha, b)))
}

/// Fits one `(λ, α)` pair on `data` as given (no standardization).
#[pyfunction]
#[pyo3(signature = (data, lam, alpha, tilde=None, loss="squared", tol=1e-7, max_sweeps=100_000, init=None))]
#[allow(clippy::too_many_arguments)]
fn fit(
    py: Python<'_>,
    data: &PyDataset,
    lam: f64,
    alpha: f64,
    tilde: Option<Vec<f64>>,
    loss: &str,
    tol: f64,
    max_sweeps: usize,
    init: Option<Vec<f64>>,
) -> PyResult<PyFitResult> {
    let pen = PenaltySpec::new(lam, alpha).map_err(py_err)?;
    let mut cfg = config(loss, tol, max_sweeps)?;
    if let Some(b) = init {
        cfg.init = Init::Warm(Coefficients::new(DVector::from_vec(b)));
    }
    let tilde = tilde_or_zeros(tilde, data.inner.p());
    let d = &data.inner;
    let res = py.detach(|| tlasso::cd_fit(d, pen, &tilde, &cfg)).map_err(py_err)?;
    Ok(PyFitResult::from(&res))
}

/// Smallest λ at which `0` or `tilde` solves the problem. Falls back to
/// `1.5·max_j|x_jᵀy|/n` when neither is attainable.
#[pyfunction]
#[pyo3(signature = (data, alpha, tilde=None))]
fn lambda_max(data: &PyDataset, alpha: f64, tilde: Option<Vec<f64>>) -> PyResult<f64> {
    let tilde = tilde_or_zeros(tilde, data.inner.p());
    Ok(lambda_max_or_fallback(&data.inner, alpha, &tilde).map_err(py_err)?.value)
}

/// Warm-started path over a log grid from `lambda_max` down by `ratio`.
/// Returns `(lambdas, fits)`.
#[pyfunction]
#[pyo3(signature = (data, alpha, tilde=None, n_lambda=100, ratio=1e-4, loss="squared", tol=1e-7))]
#[allow(clippy::too_many_arguments)]
fn fit_path(
    py: Python<'_>,
    data: &PyDataset,
    alpha: f64,
    tilde: Option<Vec<f64>>,
    n_lambda: usize,
    ratio: f64,
    loss: &str,
    tol: f64,
) -> PyResult<(Vec<f64>, Vec<PyFitResult>)> {
    let cfg = config(loss, tol, 100_000)?;
    let spec = PathSpec {
        n_lambda,
        ratio,
        ..PathSpec::new(alpha, tilde_or_zeros(tilde, data.inner.p()))
    };
    let d = &data.inner;
    let res = py.detach(|| tlasso::fit_path(d, &spec, &cfg)).map_err(py_err)?;
    Ok((res.lambdas, res.fits.iter().map(PyFitResult::from).collect()))
}

/// K-fold selection of `(α, λ)`. Returns `(best_alpha, best_lambda, refit)`.
#[pyfunction]
#[pyo3(signature = (data, tilde=None, k=10, alphas=vec![0.0, 0.25, 0.5, 0.75, 1.0], n_lambda=100, ratio=1e-4, seed=0, metric="mse", loss="squared", tol=1e-7))]
#[allow(clippy::too_many_arguments)]
fn cross_validate(
    py: Python<'_>,
    data: &PyDataset,
    tilde: Option<Vec<f64>>,
    k: usize,
    alphas: Vec<f64>,
    n_lambda: usize,
    ratio: f64,
    seed: u64,
    metric: &str,
    loss: &str,
    tol: f64,
) -> PyResult<(f64, f64, PyFitResult)> {
    let cfg = config(loss, tol, 100_000)?;
    let spec = CvSpec {
        k,
        alphas,
        n_lambda,
        ratio,
        seed,
        metric: metric.parse().map_err(py_err)?,
    };
    let tilde = tilde_or_zeros(tilde, data.inner.p());
    let d = &data.inner;
    let res = py.detach(|| tlasso::cross_validate(d, &spec, &tilde, &cfg)).map_err(py_err)?;
    Ok((res.best_alpha, res.best_lambda, PyFitResult::from(&res.refit)))
}

/// Area under the ROC curve; ties count one half.
#[pyfunction]
fn auc(labels: Vec<bool>, scores: Vec<f64>) -> PyResult<f64> {
    tlasso::metrics::auc(&labels, &scores).map_err(py_err)
}

/// High-probability bound on `‖β̂ − β*‖₂²`.
#[pyfunction]
fn error_bound(alpha: f64, c: f64, lam: f64, s: usize, phi: f64, delta_l1: f64) -> PyResult<f64> {
    bound(&BoundInputs {
        alpha,
        c,
        lambda: lam,
        s,
        phi,
        delta_l1,
    })
    .map_err(py_err)
}

/// Runs a drift or transfer experiment and returns the report as JSON.
#[pyfunction]
#[pyo3(signature = (scenario, trials=30, seed=0, methods=None, rates=vec![0.0, 0.25, 0.5, 0.75, 1.0], k=10, n_lambda=100))]
#[allow(clippy::too_many_arguments)]
fn simulate(
    py: Python<'_>,
    scenario: &str,
    trials: usize,
    seed: u64,
    methods: Option<Vec<String>>,
    rates: Vec<f64>,
    k: usize,
    n_lambda: usize,
) -> PyResult<String> {
    let kind: ScenarioKind = scenario.parse().map_err(py_err)?;
    let mut run = RunSpec::new(trials);
    if let Some(ms) = methods {
        let ms = ms.iter().map(|m| m.parse::<Method>()).collect::<tlasso::Result<Vec<_>>>().map_err(py_err)?;
        run = run.with_methods(&ms);
    }
    run.cv.k = k;
    run.cv.n_lambda = n_lambda;
    let sc = DriftScenario::new(kind, seed);
    py.detach(|| match kind {
        ScenarioKind::Abrupt | ScenarioKind::Gradual => run_concept_drift(&sc, &run).map(|r| json_str(&r)),
        ScenarioKind::Transfer => run_transfer(&sc, &rates, &run).map(|r| json_str(&r)),
        ScenarioKind::ClassificationDrift => run_classification_drift(&sc, &run).map(|r| json_str(&r)),
    })
    .map_err(py_err)
}

/// Runs one verification suite (threshold, kkt, unchanging, signs, bounds)
/// and returns its check records as JSON.
#[pyfunction]
#[pyo3(signature = (suite, seed=0))]
fn verify(py: Python<'_>, suite: &str, seed: u64) -> PyResult<String> {
    let s: Suite = suite.parse().map_err(py_err)?;
    py.detach(|| run_suite(s, seed)).map(|r| json_str(&r)).map_err(py_err)
}

#[pymodule]
#[pyo3(name = "tlasso")]
fn tlasso_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDataset>()?;
    m.add_class::<PyStandardizer>()?;
    m.add_class::<PyFitResult>()?;
    m.add_function(wrap_pyfunction!(transfer_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(lambda_max, m)?)?;
    m.add_function(wrap_pyfunction!(fit_path, m)?)?;
    m.add_function(wrap_pyfunction!(cross_validate, m)?)?;
    m.add_function(wrap_pyfunction!(auc, m)?)?;
    m.add_function(wrap_pyfunction!(error_bound, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
