//! Python bindings: topologies, demands, settings, solvers and scenarios.

use std::collections::BTreeMap;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use tebench::gravity::synthesize_scaled_tm;
use tebench::io::{parse_demands, parse_topology, write_demands, write_report, write_topology};
use tebench::mcf::{lp_lower_bound, McfParams};
use tebench::routing::total_load;
use tebench::scenarios::{run_scenario as run, ScenarioKind, ScenarioSpec};
use tebench::solvers::{builtin, Budget, BUILTIN_NAMES};

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_error(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn budget(iterations: Option<u64>, time_ms: Option<u64>, seed: u64) -> PyResult<Budget> {
    match (iterations, time_ms) {
        (Some(n), None) => Ok(Budget::iterations(n, seed)),
        (None, Some(ms)) => Ok(Budget::wall_clock_ms(ms, seed)),
        (None, None) => Ok(Budget::wall_clock_ms(1000, seed)),
        (Some(_), Some(_)) => Err(PyValueError::new_err("give either iterations or time_ms, not both")),
    }
}

#[pyclass(name = "Topology", from_py_object)]
#[derive(Clone)]
struct PyTopology(tebench::Topology);

#[pymethods]
impl PyTopology {
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        parse_topology(text).map(PyTopology).map_err(value_error)
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Self::parse(&std::fs::read_to_string(path).map_err(value_error)?)
    }

    #[getter]
    fn node_count(&self) -> usize {
        self.0.node_count()
    }

    #[getter]
    fn edge_count(&self) -> usize {
        self.0.edge_count()
    }

    #[getter]
    fn node_labels(&self) -> Vec<String> {
        self.0.nodes.iter().map(|n| n.label.clone()).collect()
    }

    /// `(label, src, dst, weight, capacity)` per edge.
    #[getter]
    fn edges(&self) -> Vec<(String, usize, usize, u32, f64)> {
        self.0.edges.iter().map(|e| (e.label.clone(), e.src, e.dst, e.weight, e.capacity)).collect()
    }

    fn to_text(&self) -> String {
        write_topology(&self.0)
    }

    fn __repr__(&self) -> String {
        format!("Topology(nodes={}, edges={})", self.0.node_count(), self.0.edge_count())
    }
}

#[pyclass(name = "TrafficMatrix", from_py_object)]
#[derive(Clone)]
struct PyTrafficMatrix(tebench::TrafficMatrix);

#[pymethods]
impl PyTrafficMatrix {
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        parse_demands(text).map(PyTrafficMatrix).map_err(value_error)
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Self::parse(&std::fs::read_to_string(path).map_err(value_error)?)
    }

    /// Gravity matrix scaled so its flow lower bound equals `target`.
    #[staticmethod]
    #[pyo3(signature = (topology, seed, target=0.9, epsilon=0.01))]
    fn gravity(topology: &PyTopology, seed: u64, target: f64, epsilon: f64) -> PyResult<Self> {
        synthesize_scaled_tm(&topology.0, seed, target, &McfParams::with_epsilon(epsilon))
            .map(PyTrafficMatrix)
            .map_err(value_error)
    }

    /// `(label, src, dst, volume)` per demand.
    #[getter]
    fn demands(&self) -> Vec<(String, usize, usize, f64)> {
        self.0.demands.iter().map(|d| (d.label.clone(), d.src, d.dst, d.volume)).collect()
    }

    #[getter]
    fn total_volume(&self) -> f64 {
        self.0.total_volume()
    }

    fn scaled(&self, factor: f64) -> Self {
        PyTrafficMatrix(self.0.scaled(factor))
    }

    fn to_text(&self) -> String {
        write_demands(&self.0)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }
}

#[pyclass(name = "Routing", from_py_object)]
#[derive(Clone)]
struct PyRouting(tebench::RoutingConfiguration);

#[pymethods]
impl PyRouting {
    #[getter]
    fn weights(&self) -> Vec<u32> {
        self.0.weights.clone()
    }

    /// Demand index to node list, source and destination included.
    #[getter]
    fn sr_segments(&self) -> BTreeMap<usize, Vec<usize>> {
        self.0.sr_segments.clone()
    }

    /// Demand index to edge-index paths.
    #[getter]
    fn explicit_paths(&self) -> BTreeMap<usize, Vec<Vec<usize>>> {
        self.0.explicit_paths.clone()
    }
}

#[pyclass(name = "Setting", from_py_object)]
#[derive(Clone)]
struct PySetting(tebench::Setting);

#[pymethods]
impl PySetting {
    #[new]
    #[pyo3(signature = (name, topology, traffic, routing=None))]
    fn new(name: String, topology: PyTopology, traffic: PyTrafficMatrix, routing: Option<PyRouting>) -> PyResult<Self> {
        let mut s = tebench::Setting::new(name, topology.0, traffic.0);
        if let Some(r) = routing {
            s.routing = r.0;
        }
        let problems = tebench::model::validate_setting(&s);
        if !problems.is_empty() {
            return Err(PyValueError::new_err(problems.join("; ")));
        }
        Ok(PySetting(s))
    }

    #[getter]
    fn name(&self) -> String {
        self.0.name.clone()
    }

    #[getter]
    fn routing(&self) -> PyRouting {
        PyRouting(self.0.routing.clone())
    }

    fn with_routing(&self, routing: PyRouting) -> Self {
        PySetting(self.0.with_routing(routing.0))
    }

    fn max_utilization(&self) -> PyResult<f64> {
        total_load(&self.0).map(|l| l.max_utilization).map_err(runtime_error)
    }

    fn edge_loads(&self) -> PyResult<Vec<f64>> {
        total_load(&self.0).map(|l| l.load).map_err(runtime_error)
    }

    #[pyo3(signature = (epsilon=0.01))]
    fn lower_bound(&self, epsilon: f64) -> PyResult<f64> {
        lp_lower_bound(&self.0.topology, &self.0.traffic, &McfParams::with_epsilon(epsilon))
            .map(|s| s.lower_bound)
            .map_err(runtime_error)
    }

    /// Runs a built-in solver and returns its routing.
    #[pyo3(signature = (solver, iterations=None, time_ms=None, seed=0))]
    fn solve(&self, py: Python<'_>, solver: &str, iterations: Option<u64>, time_ms: Option<u64>, seed: u64) -> PyResult<PyRouting> {
        let s = builtin(solver).ok_or_else(|| PyValueError::new_err(format!("unknown solver {solver:?}")))?;
        let b = budget(iterations, time_ms, seed)?;
        let out = py.detach(|| s.solve(&self.0, &b)).map_err(runtime_error)?;
        Ok(PyRouting(out.routing))
    }
}

/// Runs a scenario over the settings and returns the report text.
#[pyfunction]
#[pyo3(signature = (scenario, solver, settings, iterations=None, time_ms=None, seed=0))]
fn run_scenario(
    py: Python<'_>,
    scenario: &str,
    solver: &str,
    settings: Vec<PySetting>,
    iterations: Option<u64>,
    time_ms: Option<u64>,
    seed: u64,
) -> PyResult<String> {
    let kind: ScenarioKind = scenario.parse().map_err(value_error)?;
    let s = builtin(solver).ok_or_else(|| PyValueError::new_err(format!("unknown solver {solver:?}")))?;
    let spec = ScenarioSpec::new(kind, solver, budget(iterations, time_ms, seed)?);
    let settings: Vec<tebench::Setting> = settings.into_iter().map(|s| s.0).collect();
    let report = py
        .detach(|| run(&spec, s.as_ref(), &settings, &mut tebench::io::ReportWriter::new(std::io::sink())))
        .map_err(runtime_error)?;
    Ok(write_report(&report))
}

#[pyfunction]
fn solver_names() -> Vec<&'static str> {
    BUILTIN_NAMES.to_vec()
}

#[pymodule]
fn tebench_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTopology>()?;
    m.add_class::<PyTrafficMatrix>()?;
    m.add_class::<PyRouting>()?;
    m.add_class::<PySetting>()?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(solver_names, m)?)?;
    Ok(())
}
