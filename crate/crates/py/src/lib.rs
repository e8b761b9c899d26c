//! Python bindings. Graphs are a class; protocol runs and oracle results come
//! back as plain dicts, lists and tuples.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use ::radiomatch::graph::{self, Family, IdMode, Matching, NafAssignment};
use ::radiomatch::harness;
use ::radiomatch::matching::{self, LogMode, MatchingOptions, ScheduleParams};
use ::radiomatch::naf::{self, NafRunConfig};
use ::radiomatch::oracles::{self, EdgeOrder, Enumeration};

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn log_mode(name: &str) -> PyResult<LogMode> {
    match name {
        "natural" | "ln" => Ok(LogMode::Natural),
        "binary" | "log2" => Ok(LogMode::Binary),
        other => Err(PyValueError::new_err(format!("unknown log mode {other:?}"))),
    }
}

fn node_mask(n: usize, nodes: &[usize]) -> PyResult<Vec<bool>> {
    let mut mask = vec![false; n];
    for &v in nodes {
        *mask.get_mut(v).ok_or_else(|| PyValueError::new_err(format!("node {v} out of range")))? = true;
    }
    Ok(mask)
}

#[pyclass(name = "Graph", module = "radiomatch", frozen)]
pub struct PyGraph {
    inner: graph::Graph,
}

#[pymethods]
impl PyGraph {
    #[new]
    #[pyo3(signature = (n, edges = Vec::new()))]
    fn new(n: usize, edges: Vec<(usize, usize)>) -> PyResult<Self> {
        Ok(Self { inner: graph::Graph::from_edges(n, edges).map_err(value_error)? })
    }

    /// Builds a graph from a family spec such as `"grid:4,4"` or `"erdos_renyi:32,0.2"`.
    #[staticmethod]
    #[pyo3(signature = (spec, seed = 0))]
    fn generate(spec: &str, seed: u64) -> PyResult<Self> {
        let family: Family = spec.parse().map_err(value_error)?;
        Ok(Self { inner: family.generate(seed).map_err(value_error)? })
    }

    #[staticmethod]
    fn from_edge_list(text: &str) -> PyResult<Self> {
        Ok(Self { inner: harness::parse_edge_list(text).map_err(value_error)? })
    }

    fn to_edge_list(&self) -> String {
        harness::format_edge_list(&self.inner)
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn edge_count(&self) -> usize {
        self.inner.edge_count()
    }

    fn edges(&self) -> Vec<(usize, usize)> {
        self.inner.edges().collect()
    }

    fn neighbors(&self, v: usize) -> PyResult<Vec<usize>> {
        if v >= self.inner.n() {
            return Err(PyValueError::new_err(format!("node {v} out of range")));
        }
        Ok(self.inner.neighbors(v).to_vec())
    }

    fn degree(&self, v: usize) -> PyResult<usize> {
        Ok(self.neighbors(v)?.len())
    }

    fn max_degree(&self) -> usize {
        self.inner.max_degree()
    }

    fn is_connected(&self) -> bool {
        self.inner.is_connected()
    }

    fn __len__(&self) -> usize {
        self.inner.n()
    }

    fn __repr__(&self) -> String {
        format!("Graph(n={}, m={})", self.inner.n(), self.inner.edge_count())
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }
}

/// Sending probability for round `t` of the standard schedule.
#[pyfunction]
#[pyo3(signature = (t, n, c = matching::DEFAULT_C, log = "natural"))]
fn rate(t: u64, n: usize, c: f64, log: &str) -> PyResult<f64> {
    let params = ScheduleParams::new(c, n, log_mode(log)?).map_err(value_error)?;
    params.rate(t).map_err(value_error)
}

/// Runs the matching protocol once and returns the matching, per-node energy
/// and timing.
#[pyfunction]
#[pyo3(signature = (g, c = matching::DEFAULT_C, seed = 0, log = "natural", random_ids = None, history = false))]
fn run_matching<'py>(
    py: Python<'py>,
    g: &PyGraph,
    c: f64,
    seed: u64,
    log: &str,
    random_ids: Option<u32>,
    history: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let params = ScheduleParams::new(c, g.inner.n().max(1), log_mode(log)?).map_err(value_error)?;
    let opts = MatchingOptions {
        id_mode: random_ids.map_or(IdMode::Index, |factor| IdMode::Random { factor }),
        capture_history: history,
        trace_capacity: None,
    };
    let run = py
        .detach(|| matching::run_matching(&g.inner, &params, seed, &opts))
        .map_err(value_error)?;
    let d = PyDict::new(py);
    d.set_item("matching", run.matching.pairs().collect::<Vec<_>>())?;
    d.set_item("maximal", graph::is_maximal(&g.inner, &run.matching).map_err(value_error)?)?;
    d.set_item("energy", run.ledger.energy().to_vec())?;
    d.set_item("max_energy", run.ledger.max_energy())?;
    d.set_item("energy_bound", params.energy_bound())?;
    d.set_item("timesteps", run.timesteps)?;
    d.set_item("rounds", run.rounds)?;
    d.set_item("matched_round", run.matched_round)?;
    d.set_item("wire_ids", run.wire_ids)?;
    if let Some(h) = run.history {
        d.set_item("history_ok", h.violations.is_empty() && h.is_chain())?;
    }
    Ok(d)
}

/// Builds a neighbor assignment with `k` restricted iterations, or with
/// `k = ceil(2 L ln n)` when a load hint `L` is given instead.
#[pyfunction]
#[pyo3(signature = (g, k = None, load_hint = None, c = matching::DEFAULT_C, seed = 0))]
fn run_naf<'py>(
    py: Python<'py>,
    g: &PyGraph,
    k: Option<u64>,
    load_hint: Option<usize>,
    c: f64,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let k = match (k, load_hint) {
        (Some(k), None) => k,
        (None, Some(l)) => naf::iterations_for_load(l, g.inner.n()),
        _ => return Err(PyValueError::new_err("give exactly one of k or load_hint")),
    };
    let run = py.detach(|| naf::run_naf(&g.inner, &NafRunConfig::new(k, c), seed)).map_err(value_error)?;
    let load = graph::naf_load(&g.inner, &run.assignment).map_err(value_error)?;
    let d = PyDict::new(py);
    d.set_item("k", k)?;
    d.set_item("targets", run.assignment.targets().to_vec())?;
    d.set_item("load", load.load)?;
    d.set_item("total", !load.partial)?;
    d.set_item("coverage", run.coverage)?;
    d.set_item("load_per_iteration", run.load_per_iteration)?;
    d.set_item("first_full_coverage", run.first_full_coverage)?;
    d.set_item("energy", run.ledger.energy().to_vec())?;
    Ok(d)
}

/// Raises `ValueError` describing the first problem if `pairs` is not a
/// matching of `g`.
#[pyfunction]
fn validate_matching(g: &PyGraph, pairs: Vec<(usize, usize)>) -> PyResult<()> {
    graph::validate_matching(&g.inner, &Matching::from_pairs(pairs)).map_err(value_error)
}

#[pyfunction]
fn is_maximal(g: &PyGraph, pairs: Vec<(usize, usize)>) -> PyResult<bool> {
    graph::is_maximal(&g.inner, &Matching::from_pairs(pairs)).map_err(value_error)
}

/// Returns `(load, partial)` for an assignment given as one target (or None) per node.
#[pyfunction]
fn naf_load(g: &PyGraph, targets: Vec<Option<usize>>) -> PyResult<(usize, bool)> {
    let load = graph::naf_load(&g.inner, &NafAssignment::from_targets(targets)).map_err(value_error)?;
    Ok((load.load, load.partial))
}

#[pyfunction]
#[pyo3(signature = (g, seed = 0))]
fn greedy_matching(g: &PyGraph, seed: u64) -> Vec<(usize, usize)> {
    oracles::greedy_matching(&g.inner, &EdgeOrder::Seeded(seed)).pairs().collect()
}

#[pyfunction]
fn maximum_matching_size(g: &PyGraph) -> PyResult<usize> {
    oracles::maximum_matching_size(&g.inner).map_err(value_error)
}

#[pyfunction]
fn matching_cover_number(g: &PyGraph) -> PyResult<usize> {
    oracles::matching_cover_number(&g.inner).map_err(value_error)
}

#[pyfunction]
fn min_naf_load(g: &PyGraph) -> PyResult<usize> {
    oracles::min_naf_load(&g.inner).map_err(value_error)
}

/// Returns `(naf_load, matching_cover, consistent)`.
#[pyfunction]
fn verify_naf_mc_theorem(g: &PyGraph) -> PyResult<(usize, usize, bool)> {
    let c = oracles::verify_naf_mc_theorem(&g.inner).map_err(value_error)?;
    Ok((c.naf_load, c.matching_cover, c.consistent))
}

/// Exact probability that `edge` is matched in one round at rate `r`, with
/// the nodes in `matched` silent.
#[pyfunction]
#[pyo3(signature = (g, edge, r, matched = Vec::new(), full = false))]
fn pair_probability_exact<'py>(
    py: Python<'py>,
    g: &PyGraph,
    edge: (usize, usize),
    r: f64,
    matched: Vec<usize>,
    full: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let mask = node_mask(g.inner.n(), &matched)?;
    let method = if full { Enumeration::Full } else { Enumeration::Local };
    let exact = oracles::pair_probability_with(&g.inner, &mask, r, edge, method).map_err(value_error)?;
    let delta = oracles::residual_max_degree(&g.inner, &mask);
    let d = PyDict::new(py);
    d.set_item("value", exact.value)?;
    d.set_item("bound", oracles::pairing_lower_bound(r, delta))?;
    d.set_item("residual_max_degree", delta)?;
    d.set_item("enumerated", exact.enumerated)?;
    d.set_item("favorable", exact.favorable)?;
    Ok(d)
}

#[pyfunction]
fn pairing_lower_bound(r: f64, residual_max_degree: usize) -> f64 {
    oracles::pairing_lower_bound(r, residual_max_degree)
}

/// Runs the command-line interface with `args` (without the program name)
/// and returns its exit code.
#[pyfunction]
fn cli(py: Python<'_>, args: Vec<String>) -> i32 {
    let argv: Vec<String> = std::iter::once("radiomatch".to_string()).chain(args).collect();
    py.detach(|| harness::run_cli(argv))
}

#[pymodule(name = "radiomatch")]
fn radiomatch_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGraph>()?;
    m.add_function(wrap_pyfunction!(rate, m)?)?;
    m.add_function(wrap_pyfunction!(run_matching, m)?)?;
    m.add_function(wrap_pyfunction!(run_naf, m)?)?;
    m.add_function(wrap_pyfunction!(validate_matching, m)?)?;
    m.add_function(wrap_pyfunction!(is_maximal, m)?)?;
    m.add_function(wrap_pyfunction!(naf_load, m)?)?;
    m.add_function(wrap_pyfunction!(greedy_matching, m)?)?;
    m.add_function(wrap_pyfunction!(maximum_matching_size, m)?)?;
    m.add_function(wrap_pyfunction!(matching_cover_number, m)?)?;
    m.add_function(wrap_pyfunction!(min_naf_load, m)?)?;
    m.add_function(wrap_pyfunction!(verify_naf_mc_theorem, m)?)?;
    m.add_function(wrap_pyfunction!(pair_probability_exact, m)?)?;
    m.add_function(wrap_pyfunction!(pairing_lower_bound, m)?)?;
    m.add_function(wrap_pyfunction!(cli, m)?)?;
    m.add("DEFAULT_C", matching::DEFAULT_C)?;
    Ok(())
}
