//! Python bindings for the `minimax_bandit` crate.
//!
//! Vectors cross the boundary as lists of floats and matrices as lists of
//! rows. Errors raise `ValueError` for bad input and `RuntimeError` for
//! numerical or runtime failures.

use std::path::PathBuf;

use minimax_bandit::agents::{self, AgentConfig, AgentKind};
use minimax_bandit::environment::{self, GridSpec, Matrix, ScenarioOptions, Vector};
use minimax_bandit::graph::{self, EdgeId, NodeId, WeightAssignment};
use minimax_bandit::harness::{self, ExperimentConfig};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn to_matrix(rows: &[Vec<f64>]) -> PyResult<Matrix> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("matrix must be square"));
    }
    Ok(Matrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn from_matrix(m: &Matrix) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn parse_agent(name: &str) -> PyResult<AgentKind> {
    name.parse().map_err(value_err)
}

/// Directed graph with positive edge lengths.
#[pyclass(name = "Graph", skip_from_py_object)]
#[derive(Clone)]
struct PyGraph {
    inner: graph::DirectedGraph,
}

#[pymethods]
impl PyGraph {
    #[new]
    fn new(node_count: usize) -> Self {
        Self { inner: graph::DirectedGraph::new(node_count) }
    }

    #[pyo3(signature = (source, target, length_m = 1.0))]
    fn add_edge(&mut self, source: usize, target: usize, length_m: f64) -> PyResult<usize> {
        self.inner
            .add_edge(NodeId(source), NodeId(target), length_m)
            .map(|e| e.0)
            .map_err(value_err)
    }

    #[getter]
    fn node_count(&self) -> usize {
        self.inner.node_count()
    }

    #[getter]
    fn edge_count(&self) -> usize {
        self.inner.edge_count()
    }

    /// `(source, target, length_m)` for every edge, indexed by edge id.
    fn edges(&self) -> Vec<(usize, usize, f64)> {
        self.inner.edges().iter().map(|e| (e.from.0, e.to.0, e.length_m)).collect()
    }

    /// Path minimizing the largest weight along it, or `ValueError` if the
    /// target is unreachable.
    fn minimax_path(&self, weights: Vec<f64>, source: usize, target: usize) -> PyResult<PyPath> {
        let weights = WeightAssignment::new(weights);
        graph::minimax_path(&self.inner, &weights, NodeId(source), NodeId(target))
            .map(PyPath::from)
            .map_err(value_err)
    }

    fn is_reachable(&self, source: usize, target: usize) -> bool {
        self.inner.is_reachable(NodeId(source), NodeId(target))
    }

    fn __repr__(&self) -> String {
        format!("Graph(nodes={}, edges={})", self.inner.node_count(), self.inner.edge_count())
    }
}

#[pyclass(name = "Path", get_all, skip_from_py_object)]
#[derive(Clone)]
struct PyPath {
    edges: Vec<usize>,
    bottleneck_edge: Option<usize>,
    bottleneck_value: f64,
}

impl From<graph::PathSelection> for PyPath {
    fn from(p: graph::PathSelection) -> Self {
        Self {
            edges: p.edges.iter().map(|e| e.0).collect(),
            bottleneck_edge: p.bottleneck_edge.map(|e| e.0),
            bottleneck_value: p.bottleneck_value,
        }
    }
}

#[pymethods]
impl PyPath {
    fn __len__(&self) -> usize {
        self.edges.len()
    }

    fn __repr__(&self) -> String {
        format!("Path(edges={:?}, bottleneck_value={})", self.edges, self.bottleneck_value)
    }
}

/// Gaussian belief `N(mean, cov)` over one edge's parameter vector.
#[pyclass(name = "EdgePosterior", skip_from_py_object)]
#[derive(Clone)]
struct PyEdgePosterior {
    inner: agents::EdgePosterior,
}

#[pymethods]
impl PyEdgePosterior {
    #[new]
    fn new(mean: Vec<f64>, cov: Vec<Vec<f64>>) -> PyResult<Self> {
        let cov = to_matrix(&cov)?;
        if cov.nrows() != mean.len() {
            return Err(PyValueError::new_err("mean and covariance dimensions differ"));
        }
        Ok(Self { inner: agents::EdgePosterior::new(Vector::from_vec(mean), cov) })
    }

    #[getter]
    fn mean(&self) -> Vec<f64> {
        self.inner.mean.iter().copied().collect()
    }

    #[getter]
    fn cov(&self) -> Vec<Vec<f64>> {
        from_matrix(&self.inner.cov)
    }

    /// Conjugate update after observing `weight` under `context`; returns a new posterior.
    #[pyo3(signature = (context, weight, noise_var = 1.0))]
    fn update(&self, context: Vec<f64>, weight: f64, noise_var: f64) -> PyResult<Self> {
        self.check_dim(&context)?;
        agents::update_params(&self.inner, &Vector::from_vec(context), weight, noise_var)
            .map(|inner| Self { inner })
            .map_err(runtime_err)
    }

    fn mean_weight(&self, context: Vec<f64>) -> PyResult<f64> {
        self.check_dim(&context)?;
        Ok(self.inner.mean_weight(&Vector::from_vec(context)))
    }

    fn weight_variance(&self, context: Vec<f64>) -> PyResult<f64> {
        self.check_dim(&context)?;
        Ok(self.inner.weight_variance(&Vector::from_vec(context)))
    }

    /// Optimistic weight used by BayesUCB at round `t`.
    #[pyo3(signature = (context, t, quantile_clip = agents::DEFAULT_QUANTILE_CLIP))]
    fn bayes_ucb_weight(&self, context: Vec<f64>, t: usize, quantile_clip: f64) -> PyResult<f64> {
        self.check_dim(&context)?;
        agents::bayes_ucb_edge_weight(&self.inner, &Vector::from_vec(context), t, quantile_clip).map_err(value_err)
    }
}

impl PyEdgePosterior {
    fn check_dim(&self, context: &[f64]) -> PyResult<()> {
        if context.len() == self.inner.dim() {
            Ok(())
        } else {
            Err(PyValueError::new_err(format!("context has length {}, expected {}", context.len(), self.inner.dim())))
        }
    }
}

/// LinUCB ridge statistics `A = I + sum c c^T / s2`, `b = sum w c / s2`.
#[pyclass(name = "RidgeState", skip_from_py_object)]
#[derive(Clone)]
struct PyRidgeState {
    inner: agents::RidgeState,
}

#[pymethods]
impl PyRidgeState {
    #[new]
    fn new(d: usize) -> Self {
        Self { inner: agents::RidgeState::new(d) }
    }

    #[pyo3(signature = (context, weight, noise_var = 1.0))]
    fn update(&mut self, context: Vec<f64>, weight: f64, noise_var: f64) -> PyResult<()> {
        if context.len() != self.inner.b_vector.len() {
            return Err(PyValueError::new_err("context dimension mismatch"));
        }
        self.inner.update(&Vector::from_vec(context), weight, noise_var).map_err(runtime_err)
    }

    /// `A^-1 b`.
    fn estimate(&self) -> PyResult<Vec<f64>> {
        Ok(self.inner.estimate().map_err(runtime_err)?.iter().copied().collect())
    }

    #[pyo3(signature = (context, alpha = agents::DEFAULT_ALPHA))]
    fn lin_ucb_weight(&self, context: Vec<f64>, alpha: f64) -> PyResult<f64> {
        if context.len() != self.inner.b_vector.len() {
            return Err(PyValueError::new_err("context dimension mismatch"));
        }
        agents::lin_ucb_edge_weight(&self.inner, &Vector::from_vec(context), alpha).map_err(runtime_err)
    }

    #[getter]
    fn a_matrix(&self) -> Vec<Vec<f64>> {
        from_matrix(&self.inner.a_matrix)
    }

    #[getter]
    fn b_vector(&self) -> Vec<f64> {
        self.inner.b_vector.iter().copied().collect()
    }
}

/// A network with per-edge context distributions, priors and endpoints.
#[pyclass(name = "Scenario", skip_from_py_object)]
#[derive(Clone)]
struct PyScenario {
    inner: environment::Scenario,
}

#[pymethods]
impl PyScenario {
    /// Synthetic `width x height` grid from the bottom-left to the top-right corner.
    #[staticmethod]
    #[pyo3(signature = (width, height, d = 5, seed = 0))]
    fn grid(width: usize, height: usize, d: usize, seed: u64) -> PyResult<Self> {
        let spec = GridSpec::new(width, height).map_err(value_err)?;
        environment::generate_synthetic(spec, d, seed)
            .map(|inner| Self { inner })
            .map_err(value_err)
    }

    /// Loads a road CSV; `source` and `target` are node labels.
    #[staticmethod]
    #[pyo3(signature = (path, source, target, noise_var = 1.0, standardize_contexts = false))]
    fn from_csv(path: PathBuf, source: &str, target: &str, noise_var: f64, standardize_contexts: bool) -> PyResult<Self> {
        let net = environment::load_road_network(&path).map_err(value_err)?;
        let lookup = |label: &str| {
            net.node_id(label)
                .ok_or_else(|| PyValueError::new_err(format!("unknown node `{label}`")))
        };
        let (s, t) = (lookup(source)?, lookup(target)?);
        let options = ScenarioOptions { noise_var, standardize_contexts };
        environment::Scenario::from_network(&net, s, t, &options)
            .map(|inner| Self { inner })
            .map_err(value_err)
    }

    #[getter]
    fn d(&self) -> usize {
        self.inner.d
    }

    #[getter]
    fn source(&self) -> usize {
        self.inner.source.0
    }

    #[getter]
    fn target(&self) -> usize {
        self.inner.target.0
    }

    #[getter]
    fn node_labels(&self) -> Vec<String> {
        self.inner.node_labels.clone()
    }

    #[getter]
    fn edge_labels(&self) -> Vec<String> {
        self.inner.edge_labels.clone()
    }

    #[getter]
    fn graph(&self) -> PyGraph {
        PyGraph { inner: self.inner.graph.clone() }
    }

    fn prior(&self, edge: usize) -> PyResult<PyEdgePosterior> {
        if edge >= self.inner.edge_count() {
            return Err(PyValueError::new_err(format!("edge {edge} out of range")));
        }
        Ok(PyEdgePosterior {
            inner: agents::EdgePosterior::new(self.inner.prior_means[edge].clone(), self.inner.prior_covs[edge].clone()),
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "Scenario(nodes={}, edges={}, d={})",
            self.inner.graph.node_count(),
            self.inner.edge_count(),
            self.inner.d
        )
    }
}

#[pyclass(name = "Run", get_all)]
struct PyRun {
    seed: u64,
    instant_regret: Vec<f64>,
    cumulative_regret: Vec<f64>,
    edge_traversal_counts: Vec<u64>,
    chosen_paths: Vec<Vec<usize>>,
    explored_random_branch: Vec<bool>,
}

impl From<harness::RunRecord> for PyRun {
    fn from(r: harness::RunRecord) -> Self {
        Self {
            seed: r.seed,
            instant_regret: r.instant_regrets().collect(),
            chosen_paths: r.steps.iter().map(|s| s.chosen_path.edges.iter().map(|e: &EdgeId| e.0).collect()).collect(),
            explored_random_branch: r.steps.iter().map(|s| s.explored_random_branch).collect(),
            cumulative_regret: r.cumulative_regret,
            edge_traversal_counts: r.edge_traversal_counts,
        }
    }
}

#[pyclass(name = "Experiment", get_all)]
struct PyExperiment {
    seeds: Vec<u64>,
    completed_runs: Vec<usize>,
    mean_cumulative_regret: Vec<f64>,
    mean_instant_regret: Vec<f64>,
    final_regrets: Vec<f64>,
    excluded: Vec<(usize, u64, String)>,
}

fn agent_config(agent: &str, alpha: f64, noise_var: Option<f64>) -> PyResult<AgentConfig> {
    let mut config = AgentConfig::new(parse_agent(agent)?);
    config.alpha = alpha;
    config.noise_var = noise_var;
    config.validate().map_err(value_err)?;
    Ok(config)
}

/// One seeded episode of `horizon` rounds.
#[pyfunction]
#[pyo3(signature = (scenario, agent, horizon, seed, alpha = agents::DEFAULT_ALPHA, noise_var = None))]
fn run_episode(
    py: Python<'_>,
    scenario: &PyScenario,
    agent: &str,
    horizon: usize,
    seed: u64,
    alpha: f64,
    noise_var: Option<f64>,
) -> PyResult<PyRun> {
    let config = agent_config(agent, alpha, noise_var)?;
    let scenario = &scenario.inner;
    py.detach(|| harness::run_episode(scenario, &config, horizon, seed))
        .map(PyRun::from)
        .map_err(runtime_err)
}

/// `runs` seeded episodes (seeds `base_seed + i`) run in parallel and averaged.
#[pyfunction]
#[pyo3(signature = (scenario, agent, horizon = harness::DEFAULT_HORIZON, runs = harness::DEFAULT_RUNS, base_seed = 0, alpha = agents::DEFAULT_ALPHA, noise_var = None))]
#[allow(clippy::too_many_arguments)]
fn run_experiment(
    py: Python<'_>,
    scenario: &PyScenario,
    agent: &str,
    horizon: usize,
    runs: usize,
    base_seed: u64,
    alpha: f64,
    noise_var: Option<f64>,
) -> PyResult<PyExperiment> {
    let mut config = ExperimentConfig::new(agent_config(agent, alpha, noise_var)?);
    config.horizon = horizon;
    config.n_runs = runs;
    config.base_seed = base_seed;
    config.boxplot_stride = config.boxplot_stride.min(horizon.max(1));
    config.validate().map_err(value_err)?;
    let scenario = &scenario.inner;
    let outcome = py.detach(|| harness::run_experiment(scenario, &config)).map_err(runtime_err)?;
    Ok(PyExperiment {
        seeds: (0..runs).map(|i| config.seed(i)).collect(),
        completed_runs: outcome.report.run_indices.clone(),
        final_regrets: outcome.runs.iter().map(|r| r.final_regret()).collect(),
        mean_cumulative_regret: outcome.report.mean_cumulative_regret,
        mean_instant_regret: outcome.report.mean_instant_regret,
        excluded: outcome.report.excluded.into_iter().map(|f| (f.run_index, f.seed, f.error)).collect(),
    })
}

#[pyfunction]
fn std_normal_quantile(nu: f64) -> PyResult<f64> {
    agents::std_normal_quantile(nu).map_err(value_err)
}

#[pyfunction]
fn std_normal_cdf(x: f64) -> f64 {
    agents::std_normal_cdf(x)
}

#[pymodule]
#[pyo3(name = "minimax_bandit")]
fn minimax_bandit_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGraph>()?;
    m.add_class::<PyPath>()?;
    m.add_class::<PyEdgePosterior>()?;
    m.add_class::<PyRidgeState>()?;
    m.add_class::<PyScenario>()?;
    m.add_class::<PyRun>()?;
    m.add_class::<PyExperiment>()?;
    m.add_function(wrap_pyfunction!(run_episode, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(std_normal_quantile, m)?)?;
    m.add_function(wrap_pyfunction!(std_normal_cdf, m)?)?;
    m.add("AGENTS", AgentKind::ALL.iter().map(|k| k.name()).collect::<Vec<_>>())?;
    Ok(())
}
