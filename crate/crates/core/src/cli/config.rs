//! Flat key-value configuration with three layers: built-in defaults, a TOML
//! config file and command-line flags. Every key is also a flag.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::agents::{AgentConfig, AgentKind, DEFAULT_ALPHA, DEFAULT_QUANTILE_CLIP};
use crate::environment::{GridSpec, DEFAULT_NOISE_VAR};
use crate::harness::{ExperimentConfig, DEFAULT_BOXPLOT_STRIDE, DEFAULT_HORIZON, DEFAULT_RUNS};

pub const OUT_DIR_ENV: &str = "MINIMAX_BANDIT_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "results";
pub const PRIOR_RULE_LENGTH_SCALED: &str = "length_scaled";
pub const DEFAULT_GRID_D: usize = 5;

pub const KEYS: [&str; 18] = [
    "graph",
    "grid",
    "d",
    "graph_seed",
    "source",
    "target",
    "noise_var",
    "standardize_contexts",
    "prior_rule",
    "agent",
    "alpha",
    "agent_noise_var",
    "quantile_clip",
    "horizon",
    "runs",
    "base_seed",
    "boxplot_stride",
    "out_dir",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Default,
    Environment,
    ConfigFile,
    Flag,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

/// Raw string values keyed by config key, with the layer each came from.
#[derive(Debug, Clone, Default)]
pub struct Settings {
    values: BTreeMap<String, (String, Origin)>,
}

impl Settings {
    pub fn set(&mut self, key: &str, value: impl Into<String>, origin: Origin) -> Result<(), ConfigError> {
        if !KEYS.contains(&key) {
            return Err(err(format!("unknown configuration key `{key}`")));
        }
        self.values.insert(key.to_string(), (value.into(), origin));
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|(v, _)| v.as_str())
    }

    pub fn origin(&self, key: &str) -> Option<Origin> {
        self.values.get(key).map(|(_, o)| *o)
    }

    /// Parses a flat TOML document. Relative `graph` paths are resolved against
    /// `base_dir`.
    pub fn apply_toml(&mut self, text: &str, base_dir: &Path) -> Result<(), ConfigError> {
        let table: toml::Table = text.parse().map_err(|e| err(format!("config file: {e}")))?;
        for (key, value) in table {
            let raw = match value {
                toml::Value::String(s) => s,
                toml::Value::Integer(i) => i.to_string(),
                toml::Value::Float(f) => f.to_string(),
                toml::Value::Boolean(b) => b.to_string(),
                _ => return Err(err(format!("config key `{key}` must be a scalar value"))),
            };
            let raw = if key == "graph" { base_dir.join(&raw).to_string_lossy().into_owned() } else { raw };
            self.set(&key, raw, Origin::ConfigFile)?;
        }
        Ok(())
    }

    pub fn load_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| err(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        self.apply_toml(&text, base)
            .map_err(|e| err(format!("{}: {}", path.display(), e.0)))
    }

    fn parse<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        self.get(key)
            .map(|raw| raw.trim().parse::<T>().map_err(|e| err(format!("invalid value `{raw}` for `{key}`: {e}"))))
            .transpose()
    }

    fn parse_or<T: FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        Ok(self.parse(key)?.unwrap_or(default))
    }

    pub fn resolve(&self) -> Result<ResolvedConfig, ConfigError> {
        let scenario = match (self.get("graph"), self.get("grid")) {
            (Some(_), Some(_)) => return Err(err("`graph` and `grid` are mutually exclusive")),
            (Some(path), None) => ScenarioSource::Graph { path: PathBuf::from(path), expected_d: self.parse("d")? },
            (None, Some(grid)) => ScenarioSource::Grid {
                grid: parse_grid(grid)?,
                d: self.parse_or("d", DEFAULT_GRID_D)?,
                graph_seed: self.parse_or("graph_seed", 0)?,
            },
            (None, None) => return Err(err("no scenario given: set `graph` (road CSV) or `grid` (e.g. 5x5)")),
        };
        if let ScenarioSource::Grid { d: 0, .. } | ScenarioSource::Graph { expected_d: Some(0), .. } = scenario {
            return Err(err("`d` must be at least 1"));
        }
        let prior_rule = self.get("prior_rule").unwrap_or(PRIOR_RULE_LENGTH_SCALED).to_string();
        if prior_rule != PRIOR_RULE_LENGTH_SCALED {
            return Err(err(format!("unsupported prior_rule `{prior_rule}` (only `{PRIOR_RULE_LENGTH_SCALED}`)")));
        }
        let out_dir = self
            .get("out_dir")
            .map(PathBuf::from)
            .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));

        let config = ResolvedConfig {
            scenario,
            source: self.get("source").map(str::to_string),
            target: self.get("target").map(str::to_string),
            noise_var: self.parse_or("noise_var", DEFAULT_NOISE_VAR)?,
            standardize_contexts: self.parse_or("standardize_contexts", false)?,
            prior_rule,
            agent: self.parse_or("agent", AgentKind::Thompson)?,
            alpha: self.parse_or("alpha", DEFAULT_ALPHA)?,
            agent_noise_var: self.parse("agent_noise_var")?,
            quantile_clip: self.parse_or("quantile_clip", DEFAULT_QUANTILE_CLIP)?,
            horizon: self.parse_or("horizon", DEFAULT_HORIZON)?,
            runs: self.parse_or("runs", DEFAULT_RUNS)?,
            base_seed: self.parse_or("base_seed", 0)?,
            boxplot_stride: self.parse_or("boxplot_stride", DEFAULT_BOXPLOT_STRIDE)?,
            out_dir,
        };
        config.validate()?;
        Ok(config)
    }

    /// Where each key's effective value came from, for the manifest.
    pub fn origins(&self) -> BTreeMap<&'static str, Origin> {
        KEYS.iter()
            .map(|&k| {
                let fallback = if k == "out_dir" && std::env::var_os(OUT_DIR_ENV).is_some() {
                    Origin::Environment
                } else {
                    Origin::Default
                };
                (k, self.origin(k).unwrap_or(fallback))
            })
            .collect()
    }
}

pub fn parse_grid(raw: &str) -> Result<GridSpec, ConfigError> {
    let (w, h) = raw
        .trim()
        .split_once(['x', 'X'])
        .ok_or_else(|| err(format!("grid `{raw}` must look like WIDTHxHEIGHT")))?;
    let w: usize = w.parse().map_err(|_| err(format!("invalid grid width in `{raw}`")))?;
    let h: usize = h.parse().map_err(|_| err(format!("invalid grid height in `{raw}`")))?;
    GridSpec::new(w, h).map_err(err)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScenarioSource {
    Graph { path: PathBuf, expected_d: Option<usize> },
    Grid { grid: GridSpec, d: usize, graph_seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvedConfig {
    pub scenario: ScenarioSource,
    pub source: Option<String>,
    pub target: Option<String>,
    pub noise_var: f64,
    pub standardize_contexts: bool,
    pub prior_rule: String,
    pub agent: AgentKind,
    pub alpha: f64,
    pub agent_noise_var: Option<f64>,
    pub quantile_clip: f64,
    pub horizon: usize,
    pub runs: usize,
    pub base_seed: u64,
    pub boxplot_stride: usize,
    pub out_dir: PathBuf,
}

impl ResolvedConfig {
    pub fn agent_config(&self) -> AgentConfig {
        AgentConfig {
            kind: self.agent,
            alpha: self.alpha,
            noise_var: self.agent_noise_var,
            quantile_clip: self.quantile_clip,
        }
    }

    pub fn experiment_config(&self) -> ExperimentConfig {
        ExperimentConfig {
            agent: self.agent_config(),
            horizon: self.horizon,
            n_runs: self.runs,
            base_seed: self.base_seed,
            boxplot_stride: self.boxplot_stride,
        }
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if !(self.noise_var > 0.0 && self.noise_var.is_finite()) {
            return Err(err(format!("noise_var must be positive, got {}", self.noise_var)));
        }
        self.experiment_config().validate().map_err(|e| err(e.to_string()))
    }
}
