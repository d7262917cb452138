//! Python bindings for the core certification library.
//!
//! The module mirrors the Rust surface: Pauli strings, graphs, stabilizer
//! tableaus, the certification protocol, the chain simulation and the
//! exact-expectation classifier. Structured reports cross the boundary as
//! plain dicts/lists so no Python-side schema is needed.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use pyo3::IntoPyObjectExt;

use unicert::certify::{
    certify, default_shot_count, CertificationConfig, EnsembleSampler,
};
use unicert::pauli::PauliString;
use unicert::promise::{certify_under_promise, evaluate_conditions, PromiseVerdict};
use unicert::rydberg::{
    measure_observables, PreparationMode, RotationMode, RydbergChainConfig, SimOptions,
};
use unicert::stabilizer::{GraphSpec, StabilizerTableau, StateClass};
use unicert::statevector::{MixedStateEnsemble, NoiseModel, StateVector};

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn json_to_py(py: Python<'_>, value: &serde_json::Value) -> PyResult<Py<PyAny>> {
    match value {
        serde_json::Value::Null => Ok(py.None()),
        serde_json::Value::Bool(b) => b.into_py_any(py),
        serde_json::Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                i.into_py_any(py)
            } else if let Some(u) = n.as_u64() {
                u.into_py_any(py)
            } else {
                n.as_f64().unwrap_or(f64::NAN).into_py_any(py)
            }
        }
        serde_json::Value::String(s) => s.into_py_any(py),
        serde_json::Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(json_to_py(py, item)?)?;
            }
            list.into_py_any(py)
        }
        serde_json::Value::Object(map) => {
            let dict = PyDict::new(py);
            for (key, item) in map {
                dict.set_item(key, json_to_py(py, item)?)?;
            }
            dict.into_py_any(py)
        }
    }
}

fn serialize_to_py<T: serde::Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let json = serde_json::to_value(value).map_err(value_error)?;
    json_to_py(py, &json)
}

/// A signed multi-qubit Pauli operator, e.g. "+XIZ" or "-YY".
#[pyclass(frozen, name = "PauliString", module = "unicert_py")]
struct PyPauliString {
    inner: PauliString,
}

#[pymethods]
impl PyPauliString {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        text.parse::<PauliString>().map(|inner| Self { inner }).map_err(value_error)
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("PauliString({:?})", self.inner.to_string())
    }

    #[getter]
    fn n_qubits(&self) -> usize {
        self.inner.n_qubits()
    }

    /// Number of non-identity letters.
    #[getter]
    fn weight(&self) -> usize {
        self.inner.weight()
    }

    /// Sorted 0-indexed sites carrying a non-identity letter.
    #[getter]
    fn support(&self) -> Vec<usize> {
        self.inner.support()
    }

    fn anticommutes(&self, other: &PyPauliString) -> PyResult<bool> {
        self.inner.anticommutes(&other.inner).map_err(value_error)
    }

    /// The operator product self * other (requires a real overall sign).
    fn multiply(&self, other: &PyPauliString) -> PyResult<PyPauliString> {
        self.inner.try_multiply(&other.inner).map(|inner| Self { inner }).map_err(value_error)
    }
}

/// An undirected simple graph naming a graph state.
#[pyclass(frozen, name = "GraphSpec", module = "unicert_py")]
struct PyGraphSpec {
    inner: GraphSpec,
}

#[pymethods]
impl PyGraphSpec {
    /// Path graph (open chain) on n vertices.
    #[staticmethod]
    fn path(n: usize) -> PyResult<Self> {
        GraphSpec::path(n).map(|inner| Self { inner }).map_err(value_error)
    }

    /// Cycle graph on n vertices.
    #[staticmethod]
    fn cycle(n: usize) -> PyResult<Self> {
        GraphSpec::cycle(n).map(|inner| Self { inner }).map_err(value_error)
    }

    /// Parses the edge-list format: first line the vertex count, then one
    /// 1-indexed "u v" pair per line; '#' starts a comment.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        GraphSpec::parse_edge_list(text).map(|inner| Self { inner }).map_err(value_error)
    }

    fn __str__(&self) -> String {
        self.inner.to_edge_list_string()
    }

    fn __repr__(&self) -> String {
        format!("GraphSpec({} vertices, {} edges)", self.inner.n_vertices(), self.edges().len())
    }

    #[getter]
    fn n_vertices(&self) -> usize {
        self.inner.n_vertices()
    }

    /// 0-indexed edge pairs.
    #[getter]
    fn edges(&self) -> Vec<(usize, usize)> {
        self.inner.edges().to_vec()
    }
}

/// A stabilizer state represented by its generator list.
#[pyclass(frozen, name = "StabilizerTableau", module = "unicert_py")]
struct PyStabilizerTableau {
    inner: StabilizerTableau,
}

#[pymethods]
impl PyStabilizerTableau {
    /// The graph state of the given graph.
    #[staticmethod]
    fn graph_state(graph: &PyGraphSpec) -> PyResult<Self> {
        StabilizerTableau::graph_state(&graph.inner)
            .map(|inner| Self { inner })
            .map_err(value_error)
    }

    /// Parses one signed Pauli string per line ('#' comments allowed).
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        StabilizerTableau::parse_generator_list(text)
            .map(|inner| Self { inner })
            .map_err(value_error)
    }

    fn __str__(&self) -> String {
        self.inner.to_generator_list_string()
    }

    #[getter]
    fn n_qubits(&self) -> usize {
        self.inner.n_qubits()
    }

    #[getter]
    fn generators(&self) -> Vec<String> {
        self.inner.generators().iter().map(|g| g.to_string()).collect()
    }

    /// Exact expectation of a signed Pauli string: -1, 0 or +1.
    fn expectation(&self, pauli: &PyPauliString) -> PyResult<i8> {
        self.inner.pauli_expectation(&pauli.inner).map_err(value_error)
    }

    /// Structural class: "product", "css", "bipartite_even_degree_graph"
    /// or "general_stabilizer". Pass the intended graph to recognize the
    /// third class.
    #[pyo3(signature = (graph=None))]
    fn classify(&self, graph: Option<&PyGraphSpec>) -> &'static str {
        match self.inner.classify(graph.map(|g| &g.inner)) {
            StateClass::Product => "product",
            StateClass::Css => "css",
            StateClass::BipartiteEvenDegreeGraph => "bipartite_even_degree_graph",
            StateClass::GeneralStabilizer => "general_stabilizer",
        }
    }
}

/// Number of independent symmetric operators accessible to uniform
/// measurements on n qubits.
#[pyfunction]
fn count_independent_operators(n: usize) -> PyResult<u128> {
    unicert::pauli::count_independent_operators(n).map_err(value_error)
}

/// Shots per basis guaranteeing the advertised error probability:
/// ceil(32 ln 12 / (25 epsilon^2)).
#[pyfunction]
fn shots_per_basis(epsilon: f64) -> PyResult<u64> {
    default_shot_count(epsilon).map_err(value_error)
}

fn noise_from_args(kind: &str, p: f64, angle: f64) -> PyResult<NoiseModel> {
    match kind {
        "depolarizing" => Ok(NoiseModel::Depolarizing { p }),
        "zrot" => Ok(NoiseModel::UniformZRotation { p, angle }),
        "orthogonal" => Ok(NoiseModel::ReplaceWithOrthogonal { p }),
        other => Err(value_error(format!(
            "unknown noise kind {other:?}; expected \"depolarizing\", \"zrot\" or \"orthogonal\""
        ))),
    }
}

/// Runs the full sampled certification protocol against a simulated state
/// and returns the report as a dict. `noise=None` certifies the ideal graph
/// state; otherwise pass ("depolarizing"|"zrot"|"orthogonal", p[, angle]).
#[pyfunction]
#[pyo3(signature = (graph, epsilon, seed=0, noise=None, angle=0.0, shots=None))]
fn certify_simulated(
    py: Python<'_>,
    graph: &PyGraphSpec,
    epsilon: f64,
    seed: u64,
    noise: Option<(String, f64)>,
    angle: f64,
    shots: Option<u64>,
) -> PyResult<Py<PyAny>> {
    let ideal = MixedStateEnsemble::pure(
        StateVector::graph_state(&graph.inner).map_err(value_error)?,
    );
    let ensemble = match noise {
        None => ideal,
        Some((kind, p)) => ideal
            .apply_noise(&noise_from_args(&kind, p, angle)?)
            .map_err(value_error)?,
    };
    let config = CertificationConfig {
        target: graph.inner.clone(),
        epsilon,
        shots_per_basis: shots,
        seed,
    };
    let mut sampler = EnsembleSampler { ensemble };
    let report = certify(&mut sampler, &config).map_err(value_error)?;
    serialize_to_py(py, &report)
}

/// Simulates the pulsed chain protocol and returns the run summary
/// (per-site observables, symmetry value, fidelity, schedules) as a dict.
/// `ideal=True` truncates the interaction to nearest neighbours and applies
/// the rotations instantaneously.
#[pyfunction]
#[pyo3(signature = (n, h, ideal=false))]
fn chain_observables(py: Python<'_>, n: usize, h: f64, ideal: bool) -> PyResult<Py<PyAny>> {
    let cutoff = if ideal { Some(1) } else { None };
    let cfg = RydbergChainConfig::new(n, h)
        .and_then(|c| c.with_interaction_cutoff(cutoff))
        .map_err(value_error)?;
    let options = SimOptions {
        rotations: if ideal { RotationMode::Instantaneous } else { RotationMode::FinitePulse },
        preparation: PreparationMode::Pulses,
    };
    let run = measure_observables(&cfg, &options).map_err(value_error)?;
    serialize_to_py(py, &run)
}

/// Evaluates the exact-expectation conditions for a stabilizer state and
/// decides whether it is the even-N path graph state. Returns a dict with
/// "verdict" and the condition values.
#[pyfunction]
fn promise_check(py: Python<'_>, tableau: &PyStabilizerTableau) -> PyResult<Py<PyAny>> {
    let conditions = evaluate_conditions(&tableau.inner).map_err(value_error)?;
    let verdict = certify_under_promise(&tableau.inner).map_err(value_error)?;
    let report = serde_json::json!({
        "verdict": match verdict {
            PromiseVerdict::IsTargetGraphState => "is_target_graph_state",
            PromiseVerdict::IsNot => "is_not",
        },
        "conditions": serde_json::to_value(&conditions).map_err(value_error)?,
    });
    json_to_py(py, &report)
}

#[pymodule]
fn unicert_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPauliString>()?;
    m.add_class::<PyGraphSpec>()?;
    m.add_class::<PyStabilizerTableau>()?;
    m.add_function(wrap_pyfunction!(count_independent_operators, m)?)?;
    m.add_function(wrap_pyfunction!(shots_per_basis, m)?)?;
    m.add_function(wrap_pyfunction!(certify_simulated, m)?)?;
    m.add_function(wrap_pyfunction!(chain_observables, m)?)?;
    m.add_function(wrap_pyfunction!(promise_check, m)?)?;
    Ok(())
}
