//! Python bindings: scenarios, the cascade, and the CW model.

use funnel_core::cli::{self, Exit, Overrides, SweepParam};
use funnel_core::controller::{build_cascade, ControllerConfig, ErrorDerivatives};
use funnel_core::integrator::Trace;
use funnel_core::monitor::TolProfile;
use funnel_core::systems::{docking_reference as docking, ClohessyWiltshireModel, ISS_ALTITUDE};
use funnel_core::{Error, TimePoint};
use pyo3::create_exception;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(funnel_py, FunnelViolation, PyRuntimeError);
create_exception!(funnel_py, SolverFailure, PyRuntimeError);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::FunnelViolation { .. } => FunnelViolation::new_err(e.to_string()),
        Error::StepUnderflow { .. } | Error::StepLimit(_) => SolverFailure::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// A parsed scenario file.
#[pyclass(module = "funnel_py")]
struct Scenario {
    inner: cli::Scenario,
}

#[pymethods]
impl Scenario {
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        cli::Scenario::load(std::path::Path::new(path))
            .map(|inner| Self { inner })
            .map_err(to_py)
    }

    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        cli::Scenario::parse(text)
            .map(|inner| Self { inner })
            .map_err(to_py)
    }

    #[getter]
    fn name(&self) -> &str {
        &self.inner.name
    }

    #[getter]
    fn horizon(&self) -> f64 {
        self.inner.controller.horizon
    }

    #[getter]
    fn c(&self) -> f64 {
        self.inner.controller.c
    }

    /// Copy with `eps`, `tol` or `fixed_step` overridden.
    #[pyo3(signature = (eps=None, tol=None, fixed_step=None))]
    fn with_overrides(&self, eps: Option<f64>, tol: Option<f64>, fixed_step: Option<f64>) -> Self {
        let mut inner = self.inner.clone();
        Overrides {
            eps,
            tol,
            fixed_step,
        }
        .apply(&mut inner);
        Self { inner }
    }

    fn check(&self) -> Feasibility {
        let out = cli::check(&self.inner);
        let (norms, margins, failed_level) =
            out.feasibility.map_or((Vec::new(), Vec::new(), None), |f| {
                (f.norms, f.margins, f.failed_level)
            });
        Feasibility {
            exit_code: out.exit.code(),
            status: out.exit.label().to_string(),
            norms,
            margins,
            failed_level,
            error: out.error.map(|e| e.to_string()),
        }
    }

    fn run(&self, py: Python<'_>) -> RunResult {
        let scenario = self.inner.clone();
        let out = py.detach(move || cli::run(&scenario, &TolProfile::default()));
        RunResult {
            report: out.report(&self.inner.name),
            exit_code: out.exit.code(),
            status: out.exit.label().to_string(),
            error: out.error.as_ref().map(|e| e.to_string()),
            funnel_ok: out.verification.as_ref().is_some_and(|v| v.funnel_ok),
            terminal_errors: out.verification.as_ref().map(|v| v.terminal_errors.clone()),
            audit_gamma_deviation: out.audit.as_ref().map(|a| a.gamma_deviation),
            trace: out.trace,
        }
    }

    /// Sweeps `param` ("c", "T" or "eps") over `grid`; returns the summary CSV.
    fn sweep(&self, py: Python<'_>, param: &str, grid: Vec<f64>) -> PyResult<String> {
        let p: SweepParam = param.parse().map_err(PyValueError::new_err)?;
        let scenario = self.inner.clone();
        let rows = py
            .detach(move || cli::sweep(&scenario, p, &grid, &TolProfile::default()))
            .map_err(to_py)?;
        Ok(cli::sweep_csv(p, self.inner.system.shape().0, &rows))
    }

    fn __repr__(&self) -> String {
        format!(
            "Scenario(name={:?}, T={}, c={})",
            self.inner.name,
            self.horizon(),
            self.c()
        )
    }
}

/// Initial cascade norms and margins.
#[pyclass(module = "funnel_py", get_all)]
struct Feasibility {
    exit_code: i32,
    status: String,
    norms: Vec<f64>,
    margins: Vec<f64>,
    failed_level: Option<usize>,
    error: Option<String>,
}

#[pymethods]
impl Feasibility {
    #[getter]
    fn passed(&self) -> bool {
        self.exit_code == Exit::Ok.code()
    }
}

/// Outcome of a closed-loop run.
#[pyclass(module = "funnel_py")]
struct RunResult {
    #[pyo3(get)]
    exit_code: i32,
    #[pyo3(get)]
    status: String,
    #[pyo3(get)]
    error: Option<String>,
    #[pyo3(get)]
    report: String,
    #[pyo3(get)]
    funnel_ok: bool,
    #[pyo3(get)]
    terminal_errors: Option<Vec<f64>>,
    #[pyo3(get)]
    audit_gamma_deviation: Option<f64>,
    trace: Option<Trace>,
}

#[pymethods]
impl RunResult {
    #[getter]
    fn time(&self) -> Vec<f64> {
        self.column(|r| r.time.elapsed)
    }

    #[getter]
    fn remaining(&self) -> Vec<f64> {
        self.column(|r| r.time.remaining)
    }

    #[getter]
    fn margin(&self) -> Vec<f64> {
        self.column(|r| r.margin())
    }

    /// `|e_k(t)|` per record, one list per level.
    #[getter]
    fn level_norms(&self) -> Vec<Vec<f64>> {
        self.records()
            .iter()
            .map(|r| r.cascade.level_norms())
            .collect()
    }

    #[getter]
    fn gains(&self) -> Vec<Vec<f64>> {
        self.records()
            .iter()
            .map(|r| r.cascade.gains.clone())
            .collect()
    }

    #[getter]
    fn inputs(&self) -> Vec<Vec<f64>> {
        self.records().iter().map(|r| r.input().to_vec()).collect()
    }

    /// Tracking error and its derivatives per record, `[record][order][channel]`.
    #[getter]
    fn errors(&self) -> Vec<Vec<Vec<f64>>> {
        self.records().iter().map(|r| r.errors.clone()).collect()
    }

    #[getter]
    fn complete(&self) -> bool {
        self.trace.as_ref().is_some_and(Trace::is_complete)
    }

    fn csv(&self) -> Option<String> {
        self.trace.as_ref().map(cli::trace_csv)
    }

    fn __len__(&self) -> usize {
        self.records().len()
    }
}

impl RunResult {
    fn records(&self) -> &[funnel_core::integrator::TraceRecord] {
        self.trace.as_ref().map_or(&[], |t| &t.records)
    }

    fn column(&self, f: impl Fn(&funnel_core::integrator::TraceRecord) -> f64) -> Vec<f64> {
        self.records().iter().map(f).collect()
    }
}

/// Evaluates the controller cascade with the default gain and switching
/// function. `errors[i]` is the `i`-th derivative of the tracking error.
#[pyfunction]
fn cascade<'py>(
    py: Python<'py>,
    horizon: f64,
    c: f64,
    t: f64,
    errors: Vec<Vec<f64>>,
) -> PyResult<Bound<'py, PyDict>> {
    let r = errors.len();
    let m = errors.first().map_or(0, Vec::len);
    let cfg = ControllerConfig::standard(r, m, horizon, c).map_err(to_py)?;
    let errs = ErrorDerivatives::new(errors).map_err(to_py)?;
    let state = build_cascade(&cfg, TimePoint::at(t, horizon), &errs).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("phi", state.phi)?;
    d.set_item("levels", state.levels)?;
    d.set_item("gains", state.gains)?;
    d.set_item("input", state.input)?;
    d.set_item("funnel_margin", state.funnel_margin)?;
    Ok(d)
}

/// Clohessy-Wiltshire relative dynamics about a circular orbit.
#[pyclass(module = "funnel_py", frozen)]
struct ClohessyWiltshire {
    inner: ClohessyWiltshireModel,
}

#[pymethods]
impl ClohessyWiltshire {
    #[new]
    #[pyo3(signature = (altitude=ISS_ALTITUDE))]
    fn new(altitude: f64) -> PyResult<Self> {
        ClohessyWiltshireModel::at_altitude(altitude)
            .map(|inner| Self { inner })
            .map_err(to_py)
    }

    #[getter]
    fn omega(&self) -> f64 {
        self.inner.omega()
    }

    #[getter]
    fn period(&self) -> f64 {
        self.inner.period()
    }

    fn acceleration(&self, position: [f64; 3], velocity: [f64; 3], u: [f64; 3]) -> [f64; 3] {
        self.inner.acceleration(&position, &velocity, &u)
    }
}

/// Derivative of order `order` of the docking reference at time `t`.
#[pyfunction]
fn docking_reference(start: Vec<f64>, horizon: f64, t: f64, order: usize) -> PyResult<Vec<f64>> {
    docking(&start, horizon, t, order).map_err(to_py)
}

#[pymodule]
fn funnel_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Scenario>()?;
    m.add_class::<Feasibility>()?;
    m.add_class::<RunResult>()?;
    m.add_class::<ClohessyWiltshire>()?;
    m.add_function(wrap_pyfunction!(cascade, m)?)?;
    m.add_function(wrap_pyfunction!(docking_reference, m)?)?;
    m.add("FunnelViolation", m.py().get_type::<FunnelViolation>())?;
    m.add("SolverFailure", m.py().get_type::<SolverFailure>())?;
    m.add("CSV_SCHEMA_VERSION", cli::CSV_SCHEMA_VERSION)?;
    Ok(())
}
