//! Online bottleneck identification on directed networks.
//!
//! Agents repeatedly pick a source-to-target path whose heaviest edge they
//! believe to be lightest, observe the noisy weights of the edges they
//! traversed, and refine a per-edge linear model of the weight as a function
//! of a context vector. Regret is measured against the path an omniscient
//! agent would choose under the true expected weights.
//!
//! - [`graph`]: directed graph and the minimax path oracle.
//! - [`environment`]: hidden parameters, contexts, feedback, CSV ingestion and
//!   synthetic grids.
//! - [`agents`]: Thompson sampling, BayesUCB, LinUCB, decaying epsilon-greedy
//!   and greedy.
//! - [`harness`]: the learning loop, regret accounting and metric output.
//! - [`cli`]: the `minimax-bandit` command-line tool.

pub mod agents;
pub mod cli;
pub mod environment;
pub mod graph;
pub mod harness;

pub use agents::{Agent, AgentConfig, AgentKind};
pub use environment::{Environment, Scenario};
pub use graph::{minimax_path, validate_path, DirectedGraph, EdgeId, NodeId, PathSelection, WeightAssignment};
pub use harness::{run_episode, run_experiment, ExperimentConfig, RunRecord};
