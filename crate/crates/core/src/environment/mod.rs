//! Ground-truth stochastic world.
//!
//! A [`Scenario`] is the immutable description of an experiment: topology,
//! per-edge context statistics and noise, priors and the queried endpoints.
//! An [`Environment`] pairs a scenario with one draw of the hidden per-edge
//! parameters and produces contexts, semi-bandit feedback and the expected
//! weights used for regret.

mod road;
mod synthetic;

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::graph::{DirectedGraph, EdgeId, NodeId, PathSelection, WeightAssignment};

pub use road::{load_road_network, LoadError, RoadNetwork};
pub use synthetic::{generate_synthetic, GridSpec};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// Prior mean scale per meter of edge length.
pub const PRIOR_LAMBDA_PER_METER: f64 = 1e-2;
/// Prior covariance is this multiple of `lambda_e * I`.
pub const PRIOR_COV_MULTIPLIER: f64 = 5.0;
pub const DEFAULT_NOISE_VAR: f64 = 1.0;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("prior covariance of edge {0} is not positive definite")]
    NotPositiveDefinite(EdgeId),
    #[error("dimension mismatch on edge {edge}: expected {expected}, got {got}")]
    DimensionMismatch { edge: EdgeId, expected: usize, got: usize },
    #[error("target node {to} is not reachable from source node {from}")]
    Unreachable { from: NodeId, to: NodeId },
    #[error("source and target must differ (both are node {0})")]
    SameEndpoints(NodeId),
    #[error("node {0} is not part of the graph")]
    UnknownNode(NodeId),
    #[error("noise variance must be positive, got {0}")]
    InvalidNoiseVar(f64),
    #[error(transparent)]
    Load(#[from] LoadError),
}

/// Observable statistics of one edge. The hidden parameter lives in
/// [`Environment`].
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeModel {
    pub noise_var: f64,
    pub context_means: Vector,
    pub context_vars: Vector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContextFrame {
    pub t: usize,
    pub contexts: Vec<Vector>,
}

impl ContextFrame {
    pub fn context(&self, e: EdgeId) -> &Vector {
        &self.contexts[e.0]
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioOptions {
    pub noise_var: f64,
    /// Rescale every edge's context distribution so that the mean context
    /// coordinates have unit average magnitude.
    pub standardize_contexts: bool,
}

impl Default for ScenarioOptions {
    fn default() -> Self {
        Self { noise_var: DEFAULT_NOISE_VAR, standardize_contexts: false }
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub graph: DirectedGraph,
    pub node_labels: Vec<String>,
    pub edge_labels: Vec<String>,
    pub d: usize,
    pub edge_models: Vec<EdgeModel>,
    pub prior_means: Vec<Vector>,
    pub prior_covs: Vec<Matrix>,
    pub source: NodeId,
    pub target: NodeId,
}

impl Scenario {
    /// Builds a scenario from a loaded network using the length-scaled priors
    /// of [`default_priors`].
    pub fn from_network(
        network: &RoadNetwork,
        source: NodeId,
        target: NodeId,
        options: &ScenarioOptions,
    ) -> Result<Self, EnvError> {
        if !(options.noise_var > 0.0 && options.noise_var.is_finite()) {
            return Err(EnvError::InvalidNoiseVar(options.noise_var));
        }
        let d = network.d;
        let (prior_means, prior_covs) = default_priors(&network.graph, d);
        let edge_models = network
            .context_means
            .iter()
            .zip(&network.context_vars)
            .map(|(m, v)| {
                let (m, v) = if options.standardize_contexts {
                    let scale = m.iter().map(|x| x.abs()).sum::<f64>() / d as f64;
                    if scale > 0.0 {
                        (m / scale, v / (scale * scale))
                    } else {
                        (m.clone(), v.clone())
                    }
                } else {
                    (m.clone(), v.clone())
                };
                EdgeModel { noise_var: options.noise_var, context_means: m, context_vars: v }
            })
            .collect();
        let scenario = Self {
            graph: network.graph.clone(),
            node_labels: network.node_labels.clone(),
            edge_labels: network.edge_labels.clone(),
            d,
            edge_models,
            prior_means,
            prior_covs,
            source,
            target,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    /// Checks dimensions, endpoint validity, reachability and that every prior
    /// covariance admits a Cholesky factor.
    pub fn validate(&self) -> Result<(), EnvError> {
        for node in [self.source, self.target] {
            if !self.graph.contains_node(node) {
                return Err(EnvError::UnknownNode(node));
            }
        }
        if self.source == self.target {
            return Err(EnvError::SameEndpoints(self.source));
        }
        if !self.graph.is_reachable(self.source, self.target) {
            return Err(EnvError::Unreachable { from: self.source, to: self.target });
        }
        for (i, model) in self.edge_models.iter().enumerate() {
            let edge = EdgeId(i);
            for got in [
                model.context_means.len(),
                model.context_vars.len(),
                self.prior_means[i].len(),
                self.prior_covs[i].nrows(),
                self.prior_covs[i].ncols(),
            ] {
                if got != self.d {
                    return Err(EnvError::DimensionMismatch { edge, expected: self.d, got });
                }
            }
            if model.noise_var.is_nan() || model.noise_var <= 0.0 {
                return Err(EnvError::InvalidNoiseVar(model.noise_var));
            }
            if Cholesky::new(self.prior_covs[i].clone()).is_none() {
                return Err(EnvError::NotPositiveDefinite(edge));
            }
        }
        Ok(())
    }

    pub fn edge_count(&self) -> usize {
        self.graph.edge_count()
    }

    pub fn node_id(&self, label: &str) -> Option<NodeId> {
        self.node_labels.iter().position(|l| l == label).map(NodeId)
    }
}

/// Length-scaled priors: `lambda_e = l_e / 100`, mean `lambda_e * 1`,
/// covariance `5 * lambda_e * I`.
pub fn default_priors(graph: &DirectedGraph, d: usize) -> (Vec<Vector>, Vec<Matrix>) {
    graph
        .edges()
        .iter()
        .map(|edge| {
            let lambda = edge.length_m * PRIOR_LAMBDA_PER_METER;
            (
                Vector::from_element(d, lambda),
                Matrix::identity(d, d) * (PRIOR_COV_MULTIPLIER * lambda),
            )
        })
        .unzip()
}

pub(crate) fn standard_normal_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vector {
    Vector::from_fn(d, |_, _| rng.sample(StandardNormal))
}

/// Draws every hidden parameter independently from its prior, in edge order.
pub fn draw_theta_star<R: Rng + ?Sized>(scenario: &Scenario, rng: &mut R) -> Result<Vec<Vector>, EnvError> {
    scenario
        .prior_means
        .iter()
        .zip(&scenario.prior_covs)
        .enumerate()
        .map(|(i, (mean, cov))| {
            let chol = Cholesky::new(cov.clone()).ok_or(EnvError::NotPositiveDefinite(EdgeId(i)))?;
            Ok(mean + chol.l() * standard_normal_vector(scenario.d, rng))
        })
        .collect()
}

/// A scenario together with one realization of the hidden parameters.
#[derive(Debug, Clone)]
pub struct Environment<'a> {
    scenario: &'a Scenario,
    theta_star: Vec<Vector>,
}

impl<'a> Environment<'a> {
    pub fn new(scenario: &'a Scenario, theta_star: Vec<Vector>) -> Result<Self, EnvError> {
        for (i, theta) in theta_star.iter().enumerate() {
            if theta.len() != scenario.d {
                return Err(EnvError::DimensionMismatch { edge: EdgeId(i), expected: scenario.d, got: theta.len() });
            }
        }
        Ok(Self { scenario, theta_star })
    }

    pub fn sample<R: Rng + ?Sized>(scenario: &'a Scenario, rng: &mut R) -> Result<Self, EnvError> {
        let theta = draw_theta_star(scenario, rng)?;
        Self::new(scenario, theta)
    }

    pub fn scenario(&self) -> &'a Scenario {
        self.scenario
    }

    pub fn theta_star(&self) -> &[Vector] {
        &self.theta_star
    }

    /// Each coordinate of each edge's context is drawn independently from
    /// `N(mean_i, var_i)`.
    pub fn generate_context<R: Rng + ?Sized>(&self, t: usize, rng: &mut R) -> ContextFrame {
        let contexts = self
            .scenario
            .edge_models
            .iter()
            .map(|model| {
                Vector::from_fn(self.scenario.d, |i, _| {
                    let z: f64 = rng.sample(StandardNormal);
                    model.context_means[i] + model.context_vars[i].sqrt() * z
                })
            })
            .collect();
        ContextFrame { t, contexts }
    }

    /// Semi-bandit feedback: one noisy weight per edge of `path`, in path order.
    pub fn realize_weights<R: Rng + ?Sized>(
        &self,
        frame: &ContextFrame,
        path: &PathSelection,
        rng: &mut R,
    ) -> Vec<(EdgeId, f64)> {
        path.edges
            .iter()
            .map(|&e| {
                let z: f64 = rng.sample(StandardNormal);
                let sd = self.scenario.edge_models[e.0].noise_var.sqrt();
                (e, self.expected_weight(frame, e) + sd * z)
            })
            .collect()
    }

    pub fn expected_weight(&self, frame: &ContextFrame, e: EdgeId) -> f64 {
        frame.context(e).dot(&self.theta_star[e.0])
    }

    pub fn expected_weights(&self, frame: &ContextFrame) -> WeightAssignment {
        WeightAssignment::from_fn(&self.scenario.graph, |e| self.expected_weight(frame, e))
    }
}
