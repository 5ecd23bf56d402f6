//! Bandit policies over paths.
//!
//! Every agent assigns a weight to each edge from its per-edge belief and the
//! current context, asks the minimax oracle for the path with the smallest
//! bottleneck under those weights, then learns from the weights observed on
//! the traversed edges.

mod posterior;
pub mod quantile;
mod ridge;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::environment::{ContextFrame, Scenario};
use crate::graph::{minimax_path, validate_path, DirectedGraph, EdgeId, GraphError, NodeId, PathSelection, WeightAssignment};

pub use posterior::{bayes_ucb_edge_weight, bayes_ucb_level, ts_edge_weight, update_params, EdgePosterior};
pub use quantile::{std_normal_cdf, std_normal_quantile, DomainError};
pub use ridge::{lin_ucb_edge_weight, lin_ucb_update, RidgeState};

pub const DEFAULT_ALPHA: f64 = 4.0;
pub const DEFAULT_QUANTILE_CLIP: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AgentError {
    #[error("covariance lost positive definiteness beyond repair")]
    NumericalFailure,
    #[error("covariance is not positive definite")]
    NotPositiveDefinite,
    #[error("noise variance must be positive, got {0}")]
    InvalidNoiseVar(f64),
    #[error("invalid agent configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Quantile(#[from] DomainError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("edge {edge}: {source}")]
    Edge {
        edge: EdgeId,
        #[source]
        source: Box<AgentError>,
    },
}

impl AgentError {
    fn on_edge(self, edge: EdgeId) -> Self {
        match self {
            AgentError::Edge { .. } => self,
            other => AgentError::Edge { edge, source: Box::new(other) },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    Thompson,
    BayesUcb,
    LinUcb,
    EpsGreedy,
    Greedy,
}

impl AgentKind {
    pub const ALL: [AgentKind; 5] =
        [AgentKind::Thompson, AgentKind::BayesUcb, AgentKind::LinUcb, AgentKind::EpsGreedy, AgentKind::Greedy];

    pub fn name(self) -> &'static str {
        match self {
            AgentKind::Thompson => "thompson",
            AgentKind::BayesUcb => "bayes_ucb",
            AgentKind::LinUcb => "lin_ucb",
            AgentKind::EpsGreedy => "eps_greedy",
            AgentKind::Greedy => "greedy",
        }
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AgentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AgentKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = AgentKind::ALL.iter().map(|k| k.name()).collect();
                format!("unknown agent `{s}` (expected one of {})", names.join(", "))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentConfig {
    pub kind: AgentKind,
    /// LinUCB exploration factor.
    pub alpha: f64,
    /// Noise variance the agent assumes; `None` uses each edge's true value.
    pub noise_var: Option<f64>,
    /// BayesUCB keeps its quantile level inside `[clip, 1 - clip]`.
    pub quantile_clip: f64,
}

impl AgentConfig {
    pub fn new(kind: AgentKind) -> Self {
        Self { kind, alpha: DEFAULT_ALPHA, noise_var: None, quantile_clip: DEFAULT_QUANTILE_CLIP }
    }

    pub fn validate(&self) -> Result<(), AgentError> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(AgentError::InvalidConfig(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !(self.quantile_clip > 0.0 && self.quantile_clip < 0.5) {
            return Err(AgentError::InvalidConfig(format!(
                "quantile_clip must lie in (0, 0.5), got {}",
                self.quantile_clip
            )));
        }
        if let Some(nv) = self.noise_var {
            if !(nv > 0.0 && nv.is_finite()) {
                return Err(AgentError::InvalidConfig(format!("agent noise_var must be positive, got {nv}")));
            }
        }
        Ok(())
    }
}

/// Exploration rate of the decaying epsilon-greedy agent, `t^(-1/2)`.
pub fn eps_schedule(t: usize) -> f64 {
    (t.max(1) as f64).powf(-0.5)
}

#[derive(Debug, Clone)]
enum Beliefs {
    Posterior(Vec<EdgePosterior>),
    Ridge(Vec<RidgeState>),
}

/// Outcome of one super-arm selection.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub path: PathSelection,
    /// The epsilon-greedy coin chose the random-edge branch this round.
    pub explored_random_branch: bool,
}

#[derive(Debug, Clone)]
pub struct Agent {
    config: AgentConfig,
    beliefs: Beliefs,
    noise_vars: Vec<f64>,
    source: NodeId,
    target: NodeId,
}

impl Agent {
    /// Initializes per-edge state: the scenario's priors for the Bayesian
    /// agents, `A = I`, `b = 0` for LinUCB.
    pub fn new(config: AgentConfig, scenario: &Scenario) -> Result<Self, AgentError> {
        config.validate()?;
        let beliefs = match config.kind {
            AgentKind::LinUcb => Beliefs::Ridge(vec![RidgeState::new(scenario.d); scenario.edge_count()]),
            _ => Beliefs::Posterior(
                scenario
                    .prior_means
                    .iter()
                    .zip(&scenario.prior_covs)
                    .map(|(m, c)| EdgePosterior::new(m.clone(), c.clone()))
                    .collect(),
            ),
        };
        let noise_vars = scenario
            .edge_models
            .iter()
            .map(|m| config.noise_var.unwrap_or(m.noise_var))
            .collect();
        Ok(Self { config, beliefs, noise_vars, source: scenario.source, target: scenario.target })
    }

    pub fn config(&self) -> &AgentConfig {
        &self.config
    }

    pub fn kind(&self) -> AgentKind {
        self.config.kind
    }

    pub fn posteriors(&self) -> Option<&[EdgePosterior]> {
        match &self.beliefs {
            Beliefs::Posterior(p) => Some(p),
            Beliefs::Ridge(_) => None,
        }
    }

    pub fn ridge_states(&self) -> Option<&[RidgeState]> {
        match &self.beliefs {
            Beliefs::Ridge(r) => Some(r),
            Beliefs::Posterior(_) => None,
        }
    }

    /// Posterior-mean weights `c^T mean`; only defined for Bayesian agents.
    fn greedy_weights(&self, graph: &DirectedGraph, frame: &ContextFrame) -> Result<WeightAssignment, AgentError> {
        match &self.beliefs {
            Beliefs::Posterior(posts) => {
                Ok(WeightAssignment::from_fn(graph, |e| posts[e.0].mean_weight(frame.context(e))))
            }
            Beliefs::Ridge(_) => Err(AgentError::InvalidConfig("LinUCB keeps no posterior".into())),
        }
    }

    /// The agent-specific weight of every edge for round `t`.
    pub fn edge_weights<R: Rng + ?Sized>(
        &self,
        graph: &DirectedGraph,
        frame: &ContextFrame,
        t: usize,
        rng: &mut R,
    ) -> Result<WeightAssignment, AgentError> {
        let values = match (&self.beliefs, self.config.kind) {
            (Beliefs::Ridge(states), _) => states
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    lin_ucb_edge_weight(s, frame.context(EdgeId(i)), self.config.alpha)
                        .map_err(|err| err.on_edge(EdgeId(i)))
                })
                .collect::<Result<Vec<_>, _>>()?,
            (Beliefs::Posterior(posts), AgentKind::Thompson) => posts
                .iter()
                .enumerate()
                .map(|(i, p)| ts_edge_weight(p, frame.context(EdgeId(i)), rng).map_err(|err| err.on_edge(EdgeId(i))))
                .collect::<Result<Vec<_>, _>>()?,
            (Beliefs::Posterior(posts), AgentKind::BayesUcb) => posts
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    bayes_ucb_edge_weight(p, frame.context(EdgeId(i)), t, self.config.quantile_clip)
                        .map_err(|err| err.on_edge(EdgeId(i)))
                })
                .collect::<Result<Vec<_>, _>>()?,
            (Beliefs::Posterior(_), _) => return self.greedy_weights(graph, frame),
        };
        Ok(WeightAssignment::new(values))
    }

    /// Chooses the super-arm (path) for round `t`.
    pub fn select_super_arm<R: Rng + ?Sized>(
        &self,
        graph: &DirectedGraph,
        frame: &ContextFrame,
        t: usize,
        rng: &mut R,
    ) -> Result<Selection, AgentError> {
        if self.config.kind == AgentKind::EpsGreedy {
            let explore = rng.random::<f64>() < eps_schedule(t);
            let weights = self.greedy_weights(graph, frame)?;
            if explore {
                if let Some(path) = self.random_edge_path(graph, &weights, rng) {
                    return Ok(Selection { path, explored_random_branch: true });
                }
                log::warn!("round {t}: no random edge produced a simple path, falling back to the greedy path");
            }
            let path = minimax_path(graph, &weights, self.source, self.target)?;
            return Ok(Selection { path, explored_random_branch: explore });
        }
        let weights = self.edge_weights(graph, frame, t, rng)?;
        let path = minimax_path(graph, &weights, self.source, self.target)?;
        Ok(Selection { path, explored_random_branch: false })
    }

    /// A simple source-target path forced through a uniformly random edge,
    /// completed by minimax segments on either side. Gives up after `|E|`
    /// rejected edges.
    fn random_edge_path<R: Rng + ?Sized>(
        &self,
        graph: &DirectedGraph,
        weights: &WeightAssignment,
        rng: &mut R,
    ) -> Option<PathSelection> {
        let m = graph.edge_count();
        for _ in 0..m {
            let forced = EdgeId(rng.random_range(0..m));
            let edge = graph.edge(forced);
            let Ok(head) = minimax_path(graph, weights, self.source, edge.from) else { continue };
            let Ok(tail) = minimax_path(graph, weights, edge.to, self.target) else { continue };
            let mut edges = head.edges;
            edges.push(forced);
            edges.extend(tail.edges);
            let path = PathSelection::from_edges(edges, weights);
            if validate_path(graph, &path, self.source, self.target) {
                return Some(path);
            }
        }
        None
    }

    /// Learns from semi-bandit feedback on the traversed edges.
    pub fn observe(&mut self, frame: &ContextFrame, feedback: &[(EdgeId, f64)]) -> Result<(), AgentError> {
        for &(e, w) in feedback {
            let context = frame.context(e);
            let noise_var = self.noise_vars[e.0];
            match &mut self.beliefs {
                Beliefs::Posterior(posts) => {
                    posts[e.0] = posts[e.0].update(context, w, noise_var).map_err(|err| err.on_edge(e))?;
                }
                Beliefs::Ridge(states) => {
                    states[e.0].update(context, w, noise_var).map_err(|err| err.on_edge(e))?;
                }
            }
        }
        Ok(())
    }
}
