//! Command-line front end: `simulate`, `generate-graph` and `inspect`.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure.

pub mod config;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::environment::{load_road_network, RoadNetwork, Scenario, ScenarioOptions};
use crate::graph::NodeId;
use crate::harness::{quantile_linear, run_experiment, write_metrics, HarnessError};
use config::{ConfigError, Origin, ResolvedConfig, ScenarioSource, Settings, PRIOR_RULE_LENGTH_SCALED};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "minimax-bandit", version, about = "Online bottleneck identification with contextual semi-bandits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a multi-seed experiment and write regret metrics.
    Simulate(Box<SimulateArgs>),
    /// Write a synthetic grid network in the road CSV schema plus a scenario file.
    GenerateGraph(GenerateArgs),
    /// Print summary statistics of a road CSV (or scenario file).
    Inspect(InspectArgs),
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Flat TOML config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Synthetic grid instead of a road file, e.g. 5x5.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    graph_seed: Option<u64>,
    #[arg(long)]
    source: Option<String>,
    #[arg(long)]
    target: Option<String>,
    #[arg(long)]
    noise_var: Option<f64>,
    #[arg(long)]
    standardize_contexts: Option<bool>,
    #[arg(long)]
    prior_rule: Option<String>,
    /// thompson, bayes_ucb, lin_ucb, eps_greedy or greedy.
    #[arg(long)]
    agent: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    agent_noise_var: Option<f64>,
    #[arg(long)]
    quantile_clip: Option<f64>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long, alias = "seed")]
    base_seed: Option<u64>,
    #[arg(long, alias = "stride")]
    boxplot_stride: Option<usize>,
    #[arg(long, alias = "out")]
    out_dir: Option<PathBuf>,
}

impl SimulateArgs {
    fn flag_values(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        let mut push = |key: &'static str, value: Option<String>| {
            if let Some(v) = value {
                out.push((key, v));
            }
        };
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.to_string_lossy().into_owned());
        push("graph", path(&self.graph));
        push("grid", self.grid.clone());
        push("d", self.d.map(|v| v.to_string()));
        push("graph_seed", self.graph_seed.map(|v| v.to_string()));
        push("source", self.source.clone());
        push("target", self.target.clone());
        push("noise_var", self.noise_var.map(|v| v.to_string()));
        push("standardize_contexts", self.standardize_contexts.map(|v| v.to_string()));
        push("prior_rule", self.prior_rule.clone());
        push("agent", self.agent.clone());
        push("alpha", self.alpha.map(|v| v.to_string()));
        push("agent_noise_var", self.agent_noise_var.map(|v| v.to_string()));
        push("quantile_clip", self.quantile_clip.map(|v| v.to_string()));
        push("horizon", self.horizon.map(|v| v.to_string()));
        push("runs", self.runs.map(|v| v.to_string()));
        push("base_seed", self.base_seed.map(|v| v.to_string()));
        push("boxplot_stride", self.boxplot_stride.map(|v| v.to_string()));
        push("out_dir", path(&self.out_dir));
        out
    }
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// Grid size, e.g. 5x5.
    #[arg(long)]
    grid: String,
    #[arg(long, default_value_t = config::DEFAULT_GRID_D)]
    d: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path; the scenario file is written next to it with a `.toml` extension.
    #[arg(long, default_value = "grid.csv")]
    out: PathBuf,
    #[arg(long, default_value_t = crate::environment::DEFAULT_NOISE_VAR)]
    noise_var: f64,
}

#[derive(Debug, Args)]
struct InspectArgs {
    /// Road CSV, or a `.toml` scenario file naming one.
    file: PathBuf,
    #[arg(long)]
    source: Option<String>,
    #[arg(long)]
    target: Option<String>,
}

#[derive(Debug)]
enum CliError {
    Config(String),
    Runtime(String),
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.0)
    }
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_CONFIG,
            };
            if code == EXIT_OK {
                let _ = write!(stdout, "{}", e.render());
            } else {
                let _ = write!(stderr, "{}", e.render());
            }
            return code;
        }
    };
    let result = match cli.command {
        Command::Simulate(args) => simulate(&args, stdout, stderr),
        Command::GenerateGraph(args) => generate_graph(&args, stdout),
        Command::Inspect(args) => inspect(&args, stdout, stderr),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(CliError::Config(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            EXIT_CONFIG
        }
        Err(CliError::Runtime(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            EXIT_RUNTIME
        }
    }
}

fn resolve_node(network: &RoadNetwork, label: Option<&str>, fallback: NodeId, role: &str) -> Result<NodeId, CliError> {
    match label {
        Some(l) => network
            .node_id(l)
            .ok_or_else(|| CliError::Config(format!("{role} node `{l}` does not exist in the graph"))),
        None => Ok(fallback),
    }
}

fn build_scenario(cfg: &ResolvedConfig, stderr: &mut dyn Write) -> Result<Scenario, CliError> {
    let (network, default_source, default_target) = match &cfg.scenario {
        ScenarioSource::Graph { path, expected_d } => {
            let net = load_road_network(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            if let Some(d) = expected_d {
                if *d != net.d {
                    return Err(CliError::Config(format!(
                        "configured d = {d} but {} has {} hour columns",
                        path.display(),
                        net.d
                    )));
                }
            }
            let n = net.graph.node_count();
            if n < 2 {
                return Err(CliError::Config(format!("{} has fewer than two nodes", path.display())));
            }
            if cfg.source.is_none() || cfg.target.is_none() {
                let _ = writeln!(stderr, "note: source/target not set, defaulting to the first and last node of the file");
            }
            (net, NodeId(0), NodeId(n - 1))
        }
        ScenarioSource::Grid { grid, d, graph_seed } => (grid.network(*d, *graph_seed), grid.source(), grid.target()),
    };
    let source = resolve_node(&network, cfg.source.as_deref(), default_source, "source")?;
    let target = resolve_node(&network, cfg.target.as_deref(), default_target, "target")?;
    let options = ScenarioOptions { noise_var: cfg.noise_var, standardize_contexts: cfg.standardize_contexts };
    Scenario::from_network(&network, source, target, &options).map_err(|e| CliError::Config(e.to_string()))
}

fn prior_manifest(scenario: &Scenario) -> serde_json::Value {
    let edges: Vec<_> = scenario
        .graph
        .edges()
        .iter()
        .map(|edge| {
            let i = edge.id.0;
            let mut off_diag = scenario.prior_covs[i].clone();
            off_diag.fill_diagonal(0.0);
            json!({
                "edge_id": scenario.edge_labels[i],
                "length_m": edge.length_m,
                "lambda": edge.length_m * crate::environment::PRIOR_LAMBDA_PER_METER,
                "mean": scenario.prior_means[i].iter().collect::<Vec<_>>(),
                "cov_diagonal": scenario.prior_covs[i].diagonal().iter().collect::<Vec<_>>(),
                "cov_off_diagonal_max_abs": off_diag.abs().max(),
            })
        })
        .collect();
    json!({
        "rule": PRIOR_RULE_LENGTH_SCALED,
        "lambda_per_meter": crate::environment::PRIOR_LAMBDA_PER_METER,
        "cov_multiplier": crate::environment::PRIOR_COV_MULTIPLIER,
        "edges": edges,
    })
}

fn simulate(args: &SimulateArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let mut settings = Settings::default();
    if let Some(path) = &args.config {
        settings.load_file(path)?;
    }
    for (key, value) in args.flag_values() {
        settings.set(key, value, Origin::Flag)?;
    }
    let cfg = settings.resolve()?;
    let scenario = build_scenario(&cfg, stderr)?;
    let experiment = cfg.experiment_config();

    let outcome = run_experiment(&scenario, &experiment).map_err(|e| match e {
        HarnessError::InvalidConfig(_) | HarnessError::Env(_) => CliError::Config(e.to_string()),
        other => CliError::Runtime(other.to_string()),
    })?;
    for failure in &outcome.report.excluded {
        let _ = writeln!(stderr, "warning: run {} (seed {}) excluded: {}", failure.run_index, failure.seed, failure.error);
    }

    let resolved = json!({
        "resolved": cfg,
        "origins": settings.origins(),
        "config_file": args.config,
        "d": scenario.d,
        "node_count": scenario.graph.node_count(),
        "edge_count": scenario.edge_count(),
        "source_node": scenario.node_labels[scenario.source.0],
        "target_node": scenario.node_labels[scenario.target.0],
        "priors": prior_manifest(&scenario),
    });
    write_metrics(&scenario, &outcome, &resolved, &cfg.out_dir).map_err(|e| CliError::Runtime(e.to_string()))?;

    let final_regret = outcome.report.mean_cumulative_regret.last().copied().unwrap_or(0.0);
    let _ = writeln!(
        stdout,
        "agent={} T={} n_runs={} final_mean_cumulative_regret={final_regret:.6}",
        cfg.agent, cfg.horizon, cfg.runs
    );
    Ok(())
}

fn generate_graph(args: &GenerateArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let grid = config::parse_grid(&args.grid)?;
    if args.d == 0 {
        return Err(CliError::Config("`d` must be at least 1".into()));
    }
    if !(args.noise_var > 0.0 && args.noise_var.is_finite()) {
        return Err(CliError::Config(format!("noise_var must be positive, got {}", args.noise_var)));
    }
    let network = grid.network(args.d, args.seed);
    network.save(&args.out).map_err(|e| CliError::Config(e.to_string()))?;

    let sidecar_path = args.out.with_extension("toml");
    let file_name = args.out.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
    let mut sidecar = toml::Table::new();
    sidecar.insert("graph".into(), file_name.into());
    sidecar.insert("source".into(), network.node_labels[grid.source().0].clone().into());
    sidecar.insert("target".into(), network.node_labels[grid.target().0].clone().into());
    sidecar.insert("noise_var".into(), args.noise_var.into());
    sidecar.insert("prior_rule".into(), PRIOR_RULE_LENGTH_SCALED.into());
    sidecar.insert("d".into(), (args.d as i64).into());
    let text = toml::to_string(&sidecar).expect("flat table serializes");
    fs::write(&sidecar_path, text).map_err(|e| CliError::Config(format!("{}: {e}", sidecar_path.display())))?;

    let _ = writeln!(
        stdout,
        "wrote {} ({} nodes, {} edges, d = {}) and {}",
        args.out.display(),
        network.graph.node_count(),
        network.graph.edge_count(),
        network.d,
        sidecar_path.display()
    );
    Ok(())
}

fn inspect(args: &InspectArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let mut settings = Settings::default();
    let graph_path = if args.file.extension().is_some_and(|e| e == "toml") {
        settings.load_file(&args.file)?;
        settings
            .get("graph")
            .map(PathBuf::from)
            .ok_or_else(|| CliError::Config(format!("{} does not name a graph", args.file.display())))?
    } else {
        args.file.clone()
    };
    let source = args.source.as_deref().or(settings.get("source"));
    let target = args.target.as_deref().or(settings.get("target"));

    let net = load_road_network(Path::new(&graph_path))
        .map_err(|e| CliError::Config(format!("{}: {e}", graph_path.display())))?;
    let _ = writeln!(
        stdout,
        "{} nodes, {} edges, d = {}",
        net.graph.node_count(),
        net.graph.edge_count(),
        net.d
    );
    let mut lengths: Vec<f64> = net.graph.edges().iter().map(|e| e.length_m).collect();
    if !lengths.is_empty() {
        lengths.sort_by(f64::total_cmp);
        let mean = lengths.iter().sum::<f64>() / lengths.len() as f64;
        let _ = writeln!(
            stdout,
            "length_m: min {:.3}, median {:.3}, mean {:.3}, max {:.3}",
            lengths[0],
            quantile_linear(&lengths, 0.5),
            mean,
            lengths[lengths.len() - 1]
        );
    }
    if let (Some(s), Some(t)) = (source, target) {
        match (net.node_id(s), net.node_id(t)) {
            (Some(si), Some(ti)) if net.graph.is_reachable(si, ti) => {
                let _ = writeln!(stdout, "target {t} is reachable from source {s}");
            }
            (Some(_), Some(_)) => {
                let _ = writeln!(stderr, "warning: target {t} is not reachable from source {s}");
            }
            _ => {
                let _ = writeln!(stderr, "warning: source {s} or target {t} is not a node of the graph");
            }
        }
    }
    Ok(())
}
