//! The online learning loop, regret accounting against the omniscient oracle,
//! and multi-seed experiments.

mod metrics;
mod stats;

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{Agent, AgentConfig, AgentError};
use crate::environment::{ContextFrame, EnvError, Environment, Scenario};
use crate::graph::{minimax_path, validate_path, GraphError, PathSelection};

pub use metrics::{write_metrics, MetricsError, METRIC_FILES};
pub use stats::{boxplot_summary, quantile_linear, BoxplotSummary};

pub const DEFAULT_HORIZON: usize = 5000;
pub const DEFAULT_RUNS: usize = 10;
pub const DEFAULT_BOXPLOT_STRIDE: usize = 200;

/// Independent random streams derived from one run seed.
#[derive(Debug, Clone, Copy)]
enum Stream {
    Theta = 0,
    Context = 1,
    Noise = 2,
    Agent = 3,
}

fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("round {t}: agent returned a path that is not a simple source-target path")]
    InvalidSelection { t: usize },
    #[error("invalid experiment configuration: {0}")]
    InvalidConfig(String),
    #[error("all {} runs failed; first error: {}", .0.len(), .0.first().map(|f| f.error.as_str()).unwrap_or(""))]
    AllRunsFailed(Vec<RunFailure>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: usize,
    pub chosen_path: PathSelection,
    pub instant_regret: f64,
    pub expected_bottleneck_chosen: f64,
    pub expected_bottleneck_optimal: f64,
    pub explored_random_branch: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    pub steps: Vec<StepRecord>,
    pub cumulative_regret: Vec<f64>,
    pub edge_traversal_counts: Vec<u64>,
    /// Wall-clock time; excluded from equality.
    pub elapsed_secs: f64,
}

impl PartialEq for RunRecord {
    fn eq(&self, other: &Self) -> bool {
        self.seed == other.seed
            && self.steps == other.steps
            && self.cumulative_regret == other.cumulative_regret
            && self.edge_traversal_counts == other.edge_traversal_counts
    }
}

impl RunRecord {
    pub fn instant_regrets(&self) -> impl Iterator<Item = f64> + '_ {
        self.steps.iter().map(|s| s.instant_regret)
    }

    pub fn final_regret(&self) -> f64 {
        self.cumulative_regret.last().copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub agent: AgentConfig,
    pub horizon: usize,
    pub n_runs: usize,
    pub base_seed: u64,
    pub boxplot_stride: usize,
}

impl ExperimentConfig {
    pub fn new(agent: AgentConfig) -> Self {
        Self {
            agent,
            horizon: DEFAULT_HORIZON,
            n_runs: DEFAULT_RUNS,
            base_seed: 0,
            boxplot_stride: DEFAULT_BOXPLOT_STRIDE,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.horizon == 0 {
            return Err(HarnessError::InvalidConfig("horizon must be at least 1".into()));
        }
        if self.n_runs == 0 {
            return Err(HarnessError::InvalidConfig("runs must be at least 1".into()));
        }
        if self.boxplot_stride == 0 {
            return Err(HarnessError::InvalidConfig("boxplot_stride must be at least 1".into()));
        }
        self.agent.validate()?;
        Ok(())
    }

    pub fn seed(&self, run_index: usize) -> u64 {
        self.base_seed.wrapping_add(run_index as u64)
    }
}

/// The path minimizing the true expected bottleneck for this frame.
pub fn oracle_super_arm(env: &Environment<'_>, frame: &ContextFrame) -> Result<PathSelection, GraphError> {
    let scenario = env.scenario();
    minimax_path(&scenario.graph, &env.expected_weights(frame), scenario.source, scenario.target)
}

/// One seeded run of the learning loop for `horizon` rounds.
pub fn run_episode(
    scenario: &Scenario,
    agent_config: &AgentConfig,
    horizon: usize,
    seed: u64,
) -> Result<RunRecord, HarnessError> {
    let started = Instant::now();
    let env = Environment::sample(scenario, &mut stream_rng(seed, Stream::Theta))?;
    let mut context_rng = stream_rng(seed, Stream::Context);
    let mut noise_rng = stream_rng(seed, Stream::Noise);
    let mut agent_rng = stream_rng(seed, Stream::Agent);
    let mut agent = Agent::new(agent_config.clone(), scenario)?;
    let graph = &scenario.graph;

    let mut steps = Vec::with_capacity(horizon);
    let mut cumulative_regret = Vec::with_capacity(horizon);
    let mut edge_traversal_counts = vec![0u64; graph.edge_count()];
    let mut running = 0.0;

    for t in 1..=horizon {
        let frame = env.generate_context(t, &mut context_rng);
        let selection = agent.select_super_arm(graph, &frame, t, &mut agent_rng)?;
        if !validate_path(graph, &selection.path, scenario.source, scenario.target) {
            return Err(HarnessError::InvalidSelection { t });
        }
        let feedback = env.realize_weights(&frame, &selection.path, &mut noise_rng);
        agent.observe(&frame, &feedback)?;

        let expected = env.expected_weights(&frame);
        let optimal = minimax_path(graph, &expected, scenario.source, scenario.target)?;
        let (_, chosen_value) = expected
            .bottleneck_of(&selection.path.edges)
            .expect("validated path is non-empty");
        let instant_regret = chosen_value - optimal.bottleneck_value;
        running += instant_regret;
        cumulative_regret.push(running);
        for e in &selection.path.edges {
            edge_traversal_counts[e.0] += 1;
        }
        steps.push(StepRecord {
            t,
            chosen_path: selection.path,
            instant_regret,
            expected_bottleneck_chosen: chosen_value,
            expected_bottleneck_optimal: optimal.bottleneck_value,
            explored_random_branch: selection.explored_random_branch,
        });
    }

    Ok(RunRecord {
        seed,
        steps,
        cumulative_regret,
        edge_traversal_counts,
        elapsed_secs: started.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFailure {
    pub run_index: usize,
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub horizon: usize,
    /// Indices (into `0..n_runs`) of the runs that completed.
    pub run_indices: Vec<usize>,
    pub mean_cumulative_regret: Vec<f64>,
    pub mean_instant_regret: Vec<f64>,
    pub boxplots: Vec<BoxplotSummary>,
    pub excluded: Vec<RunFailure>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub config: ExperimentConfig,
    /// Successful runs, ordered by run index.
    pub runs: Vec<RunRecord>,
    pub report: AggregateReport,
}

fn column_mean(series: &[&[f64]], horizon: usize) -> Vec<f64> {
    let n = series.len() as f64;
    (0..horizon)
        .map(|i| series.iter().map(|s| s[i]).sum::<f64>() / n)
        .collect()
}

/// Aggregates completed runs into mean series and boxplots of cumulative regret
/// every `stride` rounds.
pub fn aggregate(runs: &[RunRecord], run_indices: Vec<usize>, horizon: usize, stride: usize, excluded: Vec<RunFailure>) -> AggregateReport {
    let cumulative: Vec<&[f64]> = runs.iter().map(|r| r.cumulative_regret.as_slice()).collect();
    let instant: Vec<Vec<f64>> = runs.iter().map(|r| r.instant_regrets().collect()).collect();
    let instant_refs: Vec<&[f64]> = instant.iter().map(Vec::as_slice).collect();
    let boxplots = (1..=horizon / stride)
        .map(|k| {
            let t = k * stride;
            let values: Vec<f64> = cumulative.iter().map(|s| s[t - 1]).collect();
            boxplot_summary(k, t, &values)
        })
        .collect();
    AggregateReport {
        horizon,
        run_indices,
        mean_cumulative_regret: column_mean(&cumulative, horizon),
        mean_instant_regret: column_mean(&instant_refs, horizon),
        boxplots,
        excluded,
    }
}

/// Runs `n_runs` seeded episodes in parallel (seeds `base_seed + i`) and
/// aggregates the ones that succeed. Failed runs are excluded with a warning.
pub fn run_experiment(scenario: &Scenario, config: &ExperimentConfig) -> Result<ExperimentOutcome, HarnessError> {
    config.validate()?;
    scenario.validate()?;
    let results: Vec<_> = (0..config.n_runs)
        .into_par_iter()
        .map(|i| (i, run_episode(scenario, &config.agent, config.horizon, config.seed(i))))
        .collect();

    let mut runs = Vec::new();
    let mut run_indices = Vec::new();
    let mut excluded = Vec::new();
    for (i, result) in results {
        match result {
            Ok(run) => {
                runs.push(run);
                run_indices.push(i);
            }
            Err(err) => {
                log::warn!("run {i} (seed {}) failed and is excluded: {err}", config.seed(i));
                excluded.push(RunFailure { run_index: i, seed: config.seed(i), error: err.to_string() });
            }
        }
    }
    if runs.is_empty() {
        return Err(HarnessError::AllRunsFailed(excluded));
    }
    let report = aggregate(&runs, run_indices, config.horizon, config.boxplot_stride, excluded);
    Ok(ExperimentOutcome { config: config.clone(), runs, report })
}
