//! Python module `rqs`: graphs, SI snapshots, likelihood scores, the two
//! querying estimators, budget formulas and the experiment harness.

use std::fs::File;
use std::io::BufReader;
use std::sync::Arc;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rqs_core::budget::{self, BoundKind, BudgetInputs, Scheme};
use rqs_core::centrality::likelihood_table;
use rqs_core::diffusion::{self, simulate_si};
use rqs_core::estimators::{self, AdConfig, CandidateOrder, EstimationOutcome, NaConfig};
use rqs_core::graph::{self, FiniteGraph, NodeId, RegularTree};
use rqs_core::harness::{self, ExperimentConfig, HarnessScheme, RMode};
use rqs_core::respondent;

fn py_err(e: rqs_core::Error) -> PyErr {
    match e {
        rqs_core::Error::Io(io) => PyIOError::new_err(io.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

trait OrPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> OrPy<T> for rqs_core::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

fn parse<T: std::str::FromStr<Err = rqs_core::Error>>(s: &str) -> PyResult<T> {
    s.parse().py()
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Contact network: an infinite regular tree or a finite graph.
#[pyclass(frozen, name = "Graph", module = "rqs")]
struct PyGraph {
    inner: Arc<graph::Graph>,
}

#[pymethods]
impl PyGraph {
    #[staticmethod]
    fn regular_tree(d: usize) -> PyResult<Self> {
        Ok(Self::wrap(graph::Graph::RegularTree(RegularTree::new(d).py()?)))
    }

    #[staticmethod]
    #[pyo3(signature = (d_max, min_nodes, seed=0))]
    fn galton_watson(d_max: usize, min_nodes: usize, seed: u64) -> PyResult<Self> {
        Ok(Self::finite(graph::make_galton_watson(d_max, min_nodes, &mut rng(seed)).py()?))
    }

    #[staticmethod]
    #[pyo3(signature = (n, avg_degree, seed=0))]
    fn erdos_renyi(n: usize, avg_degree: f64, seed: u64) -> PyResult<Self> {
        Ok(Self::finite(graph::make_erdos_renyi(n, avg_degree, &mut rng(seed)).py()?))
    }

    #[staticmethod]
    #[pyo3(signature = (n, edge_node_ratio, seed=0))]
    fn scale_free(n: usize, edge_node_ratio: f64, seed: u64) -> PyResult<Self> {
        Ok(Self::finite(graph::make_scale_free(n, edge_node_ratio, &mut rng(seed)).py()?))
    }

    #[staticmethod]
    fn from_edges(n: usize, edges: Vec<(usize, usize)>) -> PyResult<Self> {
        Ok(Self::finite(FiniteGraph::from_edges(n, edges).py()?))
    }

    /// Loads a whitespace-separated edge list and keeps its largest component.
    #[staticmethod]
    fn from_edge_list(path: &str) -> PyResult<Self> {
        let file = File::open(path).map_err(|e| PyIOError::new_err(format!("{path}: {e}")))?;
        Ok(Self::finite(graph::load_edge_list(BufReader::new(file)).py()?))
    }

    /// Node count, or `None` for the infinite tree.
    fn node_count(&self) -> Option<usize> {
        self.inner.node_count()
    }

    fn degree(&self, v: u32) -> PyResult<usize> {
        self.check(v)?;
        Ok(self.inner.degree(NodeId(v)))
    }

    fn neighbors(&self, v: u32) -> PyResult<Vec<u32>> {
        self.check(v)?;
        Ok(self.inner.neighbors(NodeId(v)).iter().map(|w| w.0).collect())
    }

    fn is_tree(&self) -> bool {
        self.inner.is_tree()
    }

    fn __repr__(&self) -> String {
        match self.inner.as_ref() {
            graph::Graph::RegularTree(t) => format!("Graph.regular_tree({})", t.degree()),
            graph::Graph::Finite(g) => format!("<Graph nodes={} edges={}>", g.node_count(), g.edge_count()),
        }
    }
}

impl PyGraph {
    fn wrap(g: graph::Graph) -> Self {
        PyGraph { inner: Arc::new(g) }
    }

    fn finite(g: FiniteGraph) -> Self {
        Self::wrap(graph::Graph::Finite(g))
    }

    fn check(&self, v: u32) -> PyResult<()> {
        if self.inner.contains(NodeId(v)) {
            Ok(())
        } else {
            Err(PyValueError::new_err(format!("node {v} is not in the graph")))
        }
    }
}

/// Infected set with its infection order and parent links.
#[pyclass(frozen, name = "Snapshot", module = "rqs")]
struct PySnapshot {
    inner: diffusion::Snapshot,
}

#[pymethods]
impl PySnapshot {
    #[staticmethod]
    #[pyo3(signature = (graph, source, n, seed=0))]
    fn simulate(graph: &PyGraph, source: u32, n: usize, seed: u64) -> PyResult<Self> {
        let inner = simulate_si(Arc::clone(&graph.inner), NodeId(source), n, &mut rng(seed)).py()?;
        Ok(PySnapshot { inner })
    }

    /// Rebuilds a snapshot from JSON; without `graph` the infected tree
    /// stands in for the contact network.
    #[staticmethod]
    #[pyo3(signature = (text, graph=None))]
    fn from_json(text: &str, graph: Option<&PyGraph>) -> PyResult<Self> {
        let g = graph.map(|g| Arc::clone(&g.inner));
        Ok(PySnapshot {
            inner: diffusion::Snapshot::from_json(text, g).py()?,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().py()
    }

    #[getter]
    fn source(&self) -> u32 {
        self.inner.source().0
    }

    #[getter]
    fn infected(&self) -> Vec<u32> {
        self.inner.infected().iter().map(|v| v.0).collect()
    }

    fn parent(&self, v: u32) -> Option<u32> {
        self.inner.parent_of(NodeId(v)).map(|p| p.0)
    }

    fn is_tree(&self) -> bool {
        self.inner.infected_is_tree()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// Log-likelihood of every infected node being the source (rumor centrality
/// on trees, the BFS heuristic otherwise). Returns `(center, {node: score})`.
#[pyfunction]
fn likelihood_scores(snapshot: &PySnapshot) -> PyResult<(u32, Vec<(u32, f64)>)> {
    let table = likelihood_table(&snapshot.inner).py()?;
    Ok((table.center().0, table.iter().map(|(v, s)| (v.0, s)).collect()))
}

/// Exact count of infection orderings of a tree given as an edge list
/// (at most 10 nodes).
#[pyfunction]
fn brute_force_rumor_centrality(n: usize, edges: Vec<(usize, usize)>, root: usize) -> PyResult<u64> {
    let mut adj = vec![Vec::new(); n];
    for (a, b) in edges {
        if a >= n || b >= n {
            return Err(PyValueError::new_err("edge endpoint out of range"));
        }
        adj[a].push(b);
        adj[b].push(a);
    }
    if root >= n {
        return Err(PyValueError::new_err("root out of range"));
    }
    rqs_core::centrality::brute_force_rumor_centrality(&adj, root).py()
}

fn outcome_dict<'py>(py: Python<'py>, out: &EstimationOutcome) -> PyResult<Bound<'py, PyDict>> {
    let ids = |it: &mut dyn Iterator<Item = NodeId>| it.map(|v| v.0).collect::<Vec<u32>>();
    let d = PyDict::new(py);
    d.set_item("estimate", out.estimate.0)?;
    d.set_item("s_i", ids(&mut out.s_i.iter().copied()))?;
    d.set_item("s_d", ids(&mut out.s_d.iter().copied()))?;
    d.set_item("candidates", ids(&mut out.candidates.iter().copied()))?;
    d.set_item("walk", ids(&mut out.walk.iter().copied()))?;
    d.set_item("eta", out.eta.iter().map(|(v, c)| (v.0, *c)).collect::<Vec<_>>())?;
    d.set_item(
        "predecessor_edges",
        out.predecessor_edges.iter().map(|(v, w)| (v.0, w.0)).collect::<Vec<_>>(),
    )?;
    d.set_item("e_counts", out.e_counts.iter().map(|(v, c)| (v.0, *c)).collect::<Vec<_>>())?;
    d.set_item("budget_used", out.budget_used)?;
    d.set_item("budget_discarded", out.budget_discarded)?;
    Ok(d)
}

/// Non-adaptive majority-vote querying. Returns a dict of the outcome.
#[pyfunction]
#[pyo3(signature = (snapshot, k, r, p, q, seed=0, order="hop"))]
#[allow(clippy::too_many_arguments)]
fn run_mvna<'py>(
    py: Python<'py>,
    snapshot: &PySnapshot,
    k: u64,
    r: u64,
    p: f64,
    q: f64,
    seed: u64,
    order: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let mut config = NaConfig::new(k, r).py()?;
    config.order = parse::<CandidateOrder>(order)?;
    let model = respondent::TruthModel::new(p, q).py()?;
    let out = estimators::run_mvna(&snapshot.inner, &config, &model, &mut rng(seed)).py()?;
    outcome_dict(py, &out)
}

/// Adaptive majority-vote querying. Returns a dict of the outcome.
#[pyfunction]
#[pyo3(signature = (snapshot, k, r, p, q, seed=0))]
fn run_mvad<'py>(
    py: Python<'py>,
    snapshot: &PySnapshot,
    k: u64,
    r: u64,
    p: f64,
    q: f64,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let config = AdConfig::new(k, r).py()?;
    let model = respondent::TruthModel::new(p, q).py()?;
    let out = estimators::run_mvad(&snapshot.inner, &config, &model, &mut rng(seed)).py()?;
    outcome_dict(py, &out)
}

#[pyfunction]
fn choose_r_star(scheme: &str, kind: &str, k: u64, d: usize, p: f64, q: f64) -> PyResult<u64> {
    budget::choose_r_star(parse::<Scheme>(scheme)?, parse::<BoundKind>(kind)?, k, d, p, q).py()
}

/// Budget threshold; `inf` where the rate function vanishes.
#[pyfunction]
#[pyo3(signature = (scheme, kind, delta, d, p, q, h_t=None, c=1.0))]
#[allow(clippy::too_many_arguments)]
fn budget_threshold(
    scheme: &str,
    kind: &str,
    delta: f64,
    d: usize,
    p: f64,
    q: f64,
    h_t: Option<f64>,
    c: f64,
) -> PyResult<f64> {
    let mut inputs = BudgetInputs::new(delta, d, p, q).py()?.with_constants(c, 1.0, 1.0);
    if let Some(h) = h_t {
        inputs = inputs.with_h_t(h);
    }
    Ok(budget::budget_threshold(parse(scheme)?, parse(kind)?, &inputs).py()?.value())
}

#[pyfunction]
#[pyo3(signature = (delta, d, p, q, u1=1.0, u2=1.0))]
fn adaptivity_gap_bounds(delta: f64, d: usize, p: f64, q: f64, u1: f64, u2: f64) -> PyResult<(f64, f64)> {
    let inputs = BudgetInputs::new(delta, d, p, q).py()?.with_constants(1.0, u1, u2);
    budget::adaptivity_gap_bounds(&inputs).py()
}

/// `(f1, f2, f3, f4)` at `(d, p, q)`.
#[pyfunction]
fn rate_functions(d: usize, p: f64, q: f64) -> (f64, f64, f64, f64) {
    (budget::f1(d, p, q), budget::f2(d, p, q), budget::f3(d, p, q), budget::f4(d, p, q))
}

#[pyfunction]
fn distance_distribution(d: usize, k: usize, l: usize) -> PyResult<f64> {
    diffusion::distance_distribution(d, k, l).py()
}

#[pyfunction]
#[pyo3(signature = (successes, trials, z=harness::Z_95))]
fn wilson_interval(successes: u64, trials: u64, z: f64) -> PyResult<(f64, f64)> {
    harness::wilson_interval(successes, trials, z).py()
}

/// Runs a sweep and returns one dict per parameter combination.
#[pyfunction]
#[pyo3(signature = (
    graph, scheme, budgets, p, q, r="rstar", n=400, trials=200, seed=0,
    order="hop", fixed_graph=false, threads=None
))]
#[allow(clippy::too_many_arguments)]
fn run_experiment<'py>(
    py: Python<'py>,
    graph: &str,
    scheme: &str,
    budgets: Vec<u64>,
    p: Vec<f64>,
    q: Vec<f64>,
    r: &str,
    n: usize,
    trials: u64,
    seed: u64,
    order: &str,
    fixed_graph: bool,
    threads: Option<usize>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let mut config = ExperimentConfig::new(parse(graph)?, parse::<HarnessScheme>(scheme)?);
    config.budgets = budgets;
    config.p = p;
    config.q = q;
    config.r_mode = parse::<RMode>(r)?;
    config.n_infected = n;
    config.trials = trials;
    config.master_seed = seed;
    config.candidate_order = parse(order)?;
    config.fixed_graph = fixed_graph;
    config.threads = threads;
    let rows = py.detach(|| harness::run_experiment(config)).py()?;
    rows.iter()
        .map(|row| {
            let d = PyDict::new(py);
            d.set_item("scheme", row.scheme.to_string())?;
            d.set_item("graph", &row.graph)?;
            d.set_item("d", row.d)?;
            d.set_item("n", row.n)?;
            d.set_item("K", row.k)?;
            d.set_item("r", row.r)?;
            d.set_item("p", row.p)?;
            d.set_item("q", row.q)?;
            d.set_item("trials", row.trials)?;
            d.set_item("detections", row.detections)?;
            d.set_item("p_hat", row.p_hat)?;
            d.set_item("ci_lo", row.ci_lo)?;
            d.set_item("ci_hi", row.ci_hi)?;
            d.set_item("mean_budget", row.mean_budget)?;
            d.set_item("wall_time_ms", row.wall_time_ms)?;
            d.set_item("error", &row.error)?;
            Ok(d)
        })
        .collect()
}

#[pymodule]
#[pyo3(name = "rqs")]
fn rqs_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGraph>()?;
    m.add_class::<PySnapshot>()?;
    m.add_function(wrap_pyfunction!(likelihood_scores, m)?)?;
    m.add_function(wrap_pyfunction!(brute_force_rumor_centrality, m)?)?;
    m.add_function(wrap_pyfunction!(run_mvna, m)?)?;
    m.add_function(wrap_pyfunction!(run_mvad, m)?)?;
    m.add_function(wrap_pyfunction!(choose_r_star, m)?)?;
    m.add_function(wrap_pyfunction!(budget_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(adaptivity_gap_bounds, m)?)?;
    m.add_function(wrap_pyfunction!(rate_functions, m)?)?;
    m.add_function(wrap_pyfunction!(distance_distribution, m)?)?;
    m.add_function(wrap_pyfunction!(wilson_interval, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
