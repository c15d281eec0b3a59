//! Python bindings for `ensemble_gop`.
//!
//! Structured results (search traces, reports, solve records) cross the
//! boundary as plain dicts decoded from the same JSON the CLI emits.

use std::sync::Arc;

use ensemble_gop::analysis;
use ensemble_gop::descent::{self, DescentConfig};
use ensemble_gop::ensemble::MeasurementModel;
use ensemble_gop::mapping::{self, CellIndex, DiscreteOracle, GridSpec};
use ensemble_gop::objective::{validate_assumptions, ObjectiveSpec, Point};
use ensemble_gop::pipeline;
use ensemble_gop::search::{self, SearchConfig};
use ensemble_gop::{Error, RunConfig};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

fn err(e: Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

#[pyclass(name = "Objective", module = "ensemble_gop", frozen)]
struct PyObjective {
    spec: Arc<ObjectiveSpec>,
}

impl PyObjective {
    fn wrap(spec: ObjectiveSpec) -> Self {
        PyObjective {
            spec: Arc::new(spec),
        }
    }
}

#[pymethods]
impl PyObjective {
    #[staticmethod]
    fn golf_course(center: Vec<f64>, epsilon: f64) -> PyResult<Self> {
        ObjectiveSpec::golf_course(&center, epsilon)
            .map(Self::wrap)
            .map_err(err)
    }

    #[staticmethod]
    fn gaussian_well(center: Vec<f64>, sigma: f64) -> PyResult<Self> {
        ObjectiveSpec::gaussian_well(&center, sigma)
            .map(Self::wrap)
            .map_err(err)
    }

    #[staticmethod]
    #[pyo3(signature = (centers, depths, delta, slope = ensemble_gop::objective::DEFAULT_WELL_SLOPE))]
    fn multiwell(
        centers: Vec<Vec<f64>>,
        depths: Vec<f64>,
        delta: f64,
        slope: f64,
    ) -> PyResult<Self> {
        ObjectiveSpec::multiwell_with_slope(&centers, &depths, delta, slope)
            .map(Self::wrap)
            .map_err(err)
    }

    /// Wraps a Python callable `f(list[float]) -> float`. Exceptions or
    /// non-float returns surface as range errors on evaluation.
    #[staticmethod]
    #[pyo3(signature = (name, dimension, delta, basin_size, func, known_optimum = None))]
    fn custom(
        name: String,
        dimension: usize,
        delta: f64,
        basin_size: Vec<f64>,
        func: Py<PyAny>,
        known_optimum: Option<Vec<f64>>,
    ) -> PyResult<Self> {
        let spec =
            ObjectiveSpec::custom(&name, dimension, delta, basin_size, move |p: &[f64]| {
                Python::attach(|py| {
                    func.bind(py)
                        .call1((p.to_vec(),))
                        .and_then(|v| v.extract::<f64>())
                        .unwrap_or(f64::NAN)
                })
            })
            .map_err(err)?;
        let spec = match known_optimum {
            Some(x) => spec.with_known_optimum(Point::new(x)).map_err(err)?,
            None => spec,
        };
        Ok(Self::wrap(spec))
    }

    fn evaluate(&self, py: Python<'_>, p: Vec<f64>) -> PyResult<f64> {
        let spec = Arc::clone(&self.spec);
        let p = Point::new(p);
        py.detach(move || spec.evaluate(&p)).map_err(err)
    }

    fn with_gap_delta(&self, delta: f64) -> PyResult<Self> {
        (*self.spec)
            .clone()
            .with_gap_delta(delta)
            .map(Self::wrap)
            .map_err(err)
    }

    #[getter]
    fn dimension(&self) -> usize {
        self.spec.dimension()
    }

    #[getter]
    fn gap_delta(&self) -> f64 {
        self.spec.gap_delta()
    }

    #[getter]
    fn basin_size(&self) -> Vec<f64> {
        self.spec.basin_size().to_vec()
    }

    #[getter]
    fn known_optimum(&self) -> Option<Vec<f64>> {
        self.spec.known_optimum().map(|p| p.coords().to_vec())
    }

    #[getter]
    fn eval_count(&self) -> u64 {
        self.spec.eval_count()
    }

    #[getter]
    fn scan_count(&self) -> u64 {
        self.spec.scan_count()
    }

    #[pyo3(signature = (resolution = 256))]
    fn validate<'py>(&self, py: Python<'py>, resolution: usize) -> PyResult<Bound<'py, PyAny>> {
        let spec = Arc::clone(&self.spec);
        let report = py
            .detach(move || validate_assumptions(&spec, resolution))
            .map_err(err)?;
        to_py(py, &report)
    }

    fn __repr__(&self) -> String {
        format!("Objective({:?})", self.spec.kind())
    }
}

#[pyclass(name = "Grid", module = "ensemble_gop", frozen)]
struct PyGrid {
    grid: GridSpec,
}

#[pymethods]
impl PyGrid {
    #[new]
    fn new(dimension: usize, cells_per_dim: u64) -> PyResult<Self> {
        GridSpec::new(dimension, cells_per_dim)
            .map(|grid| PyGrid { grid })
            .map_err(err)
    }

    #[getter]
    fn dimension(&self) -> usize {
        self.grid.dimension()
    }

    #[getter]
    fn cells_per_dim(&self) -> u64 {
        self.grid.cells_per_dim()
    }

    #[getter]
    fn n_cells(&self) -> u64 {
        self.grid.n_cells()
    }

    #[getter]
    fn n_padded(&self) -> u64 {
        self.grid.n_padded()
    }

    fn midpoint(&self, index: u64) -> PyResult<Vec<f64>> {
        mapping::index_to_midpoint(&self.grid, CellIndex(index))
            .map(Point::into_inner)
            .map_err(err)
    }

    fn index(&self, point: Vec<f64>) -> PyResult<u64> {
        mapping::midpoint_to_index(&self.grid, &Point::new(point))
            .map(|i| i.0)
            .map_err(err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Grid(dimension={}, cells_per_dim={})",
            self.grid.dimension(),
            self.grid.cells_per_dim()
        )
    }
}

#[pyclass(name = "Oracle", module = "ensemble_gop", frozen)]
struct PyOracle {
    oracle: DiscreteOracle,
}

#[pymethods]
impl PyOracle {
    #[staticmethod]
    fn from_objective(objective: &PyObjective, grid: &PyGrid, m: u32) -> PyResult<Self> {
        DiscreteOracle::from_objective(Arc::clone(&objective.spec), grid.grid, m)
            .map(|oracle| PyOracle { oracle })
            .map_err(err)
    }

    #[staticmethod]
    fn from_marked(n_cells: u64, marked: Vec<u64>) -> PyResult<Self> {
        DiscreteOracle::from_marked(n_cells, &marked)
            .map(|oracle| PyOracle { oracle })
            .map_err(err)
    }

    fn query(&self, index: u64) -> PyResult<bool> {
        self.oracle.query(CellIndex(index)).map_err(err)
    }

    fn marked_indices(&self, py: Python<'_>) -> PyResult<Vec<u64>> {
        py.detach(|| self.oracle.marked_indices_bruteforce())
            .map(|v| v.into_iter().map(|i| i.0).collect())
            .map_err(err)
    }

    fn count_marked(&self, py: Python<'_>) -> PyResult<u64> {
        py.detach(|| self.oracle.count_marked_bruteforce())
            .map_err(err)
    }

    #[getter]
    fn n_padded(&self) -> u64 {
        self.oracle.n_padded()
    }

    #[getter]
    fn query_count(&self) -> u64 {
        self.oracle.query_count()
    }

    #[getter]
    fn classical_work(&self) -> u64 {
        self.oracle.classical_work()
    }
}

/// Runs the ensemble search. A failed verification is returned as a result
/// with `verified == False` instead of raising.
#[pyfunction]
#[pyo3(signature = (oracle, delta1 = 0.0, seed = 0, safety_c = 2.0, verify = true, max_tests = None))]
fn run_search<'py>(
    py: Python<'py>,
    oracle: &PyOracle,
    delta1: f64,
    seed: u64,
    safety_c: f64,
    verify: bool,
    max_tests: Option<u32>,
) -> PyResult<Bound<'py, PyAny>> {
    let model = MeasurementModel::new(delta1, seed).map_err(err)?;
    let config = SearchConfig {
        safety_c,
        verify_result: verify,
        max_tests,
    };
    let result = match py.detach(|| search::run_search(&oracle.oracle, &model, &config)) {
        Ok(r) => r,
        Err(Error::VerificationFailed(r)) => *r,
        Err(e) => return Err(err(e)),
    };
    to_py(py, &result)
}

#[pyfunction]
#[pyo3(signature = (objective, start, f_tol = 1e-9, fd_step = 1e-6, max_iters = 10_000, initial_step = 0.02))]
fn refine<'py>(
    py: Python<'py>,
    objective: &PyObjective,
    start: Vec<f64>,
    f_tol: f64,
    fd_step: f64,
    max_iters: u64,
    initial_step: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let config = DescentConfig {
        f_tol,
        fd_step,
        max_iters,
        initial_step,
        ..DescentConfig::default()
    };
    let spec = Arc::clone(&objective.spec);
    let start = Point::new(start);
    let result = py
        .detach(move || descent::refine(&spec, &start, &config))
        .map_err(err)?;
    to_py(py, &result)
}

/// Full pipeline from a JSON config; returns the solve report.
#[pyfunction]
#[pyo3(signature = (config_json, objective = None))]
fn solve<'py>(
    py: Python<'py>,
    config_json: &str,
    objective: Option<&PyObjective>,
) -> PyResult<Bound<'py, PyAny>> {
    let config = RunConfig::from_json(config_json).map_err(err)?;
    let spec = objective.map(|o| Arc::clone(&o.spec));
    let report = py
        .detach(move || match spec {
            Some(spec) => pipeline::solve_with(&config, spec),
            None => pipeline::solve(&config),
        })
        .map_err(err)?;
    to_py(py, &report)
}

#[pyfunction]
fn choose_sharpening_exponent(delta: f64) -> PyResult<u32> {
    mapping::choose_sharpening_exponent(delta).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (basin_size, safety = mapping::DEFAULT_GRID_SAFETY))]
fn choose_grid_resolution(basin_size: Vec<f64>, safety: f64) -> PyResult<u64> {
    mapping::choose_grid_resolution(&basin_size, safety).map_err(err)
}

#[pyfunction]
fn required_trials(partition_size: u64, delta1: f64, safety_c: f64) -> u64 {
    search::required_trials(partition_size, delta1, safety_c)
}

#[pyfunction]
fn predict_total_queries(n_padded: u64, delta1: f64, safety_c: f64) -> u64 {
    search::predict_total_queries(n_padded, delta1, safety_c)
}

#[pyfunction]
fn grover_pure_queries(n: u64) -> u64 {
    analysis::grover_pure_queries(n)
}

#[pyfunction]
fn grover_pseudopure_queries(n: u64) -> u64 {
    analysis::grover_pseudopure_queries(n)
}

#[pyfunction]
fn ensemble_threshold_max_n(py: Python<'_>, delta1: f64) -> PyResult<Bound<'_, PyAny>> {
    let report = analysis::ensemble_threshold_max_n(delta1).map_err(err)?;
    to_py(py, &report)
}

#[pymodule]
#[pyo3(name = "ensemble_gop")]
fn ensemble_gop_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyObjective>()?;
    m.add_class::<PyGrid>()?;
    m.add_class::<PyOracle>()?;
    m.add_function(wrap_pyfunction!(run_search, m)?)?;
    m.add_function(wrap_pyfunction!(refine, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(choose_sharpening_exponent, m)?)?;
    m.add_function(wrap_pyfunction!(choose_grid_resolution, m)?)?;
    m.add_function(wrap_pyfunction!(required_trials, m)?)?;
    m.add_function(wrap_pyfunction!(predict_total_queries, m)?)?;
    m.add_function(wrap_pyfunction!(grover_pure_queries, m)?)?;
    m.add_function(wrap_pyfunction!(grover_pseudopure_queries, m)?)?;
    m.add_function(wrap_pyfunction!(ensemble_threshold_max_n, m)?)?;
    m.add("BASELINE_LABEL", analysis::BASELINE_LABEL)?;
    Ok(())
}
