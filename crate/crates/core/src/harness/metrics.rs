//! CSV/JSON output of an experiment.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::{json, Value};
use thiserror::Error;

use super::ExperimentOutcome;
use crate::environment::Scenario;

pub const METRIC_FILES: [&str; 5] =
    ["cumulative_regret.csv", "instant_regret.csv", "boxplot.csv", "exploration.csv", "manifest.json"];

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

/// 17 significant digits, enough to round-trip any `f64`.
fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_csv(path: &Path, header: &[String], rows: impl Iterator<Item = Vec<String>>) -> Result<(), MetricsError> {
    let csv_err = |source| MetricsError::Csv { path: path.to_path_buf(), source };
    let mut writer = csv::Writer::from_path(path).map_err(csv_err)?;
    writer.write_record(header).map_err(csv_err)?;
    for row in rows {
        writer.write_record(&row).map_err(csv_err)?;
    }
    writer
        .flush()
        .map_err(|source| MetricsError::Io { path: path.to_path_buf(), source })
}

fn series_csv(path: &Path, outcome: &ExperimentOutcome, mean: &[f64], pick: impl Fn(usize, usize) -> f64) -> Result<(), MetricsError> {
    let mut header = vec!["t".to_string()];
    header.extend(outcome.report.run_indices.iter().map(|i| format!("run_{i}")));
    header.push("mean".into());
    let rows = (0..outcome.report.horizon).map(|step| {
        let mut row = vec![(step + 1).to_string()];
        row.extend((0..outcome.runs.len()).map(|r| fmt_float(pick(r, step))));
        row.push(fmt_float(mean[step]));
        row
    });
    write_csv(path, &header, rows)
}

/// Writes the five metric files into `out_dir`, creating it if needed.
///
/// `resolved_config` is embedded verbatim in `manifest.json` alongside the run
/// seeds, exclusions and timing.
pub fn write_metrics(
    scenario: &Scenario,
    outcome: &ExperimentOutcome,
    resolved_config: &Value,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, MetricsError> {
    fs::create_dir_all(out_dir).map_err(|source| MetricsError::Io { path: out_dir.to_path_buf(), source })?;
    let paths: Vec<PathBuf> = METRIC_FILES.iter().map(|f| out_dir.join(f)).collect();
    let report = &outcome.report;

    series_csv(&paths[0], outcome, &report.mean_cumulative_regret, |r, s| outcome.runs[r].cumulative_regret[s])?;
    series_csv(&paths[1], outcome, &report.mean_instant_regret, |r, s| outcome.runs[r].steps[s].instant_regret)?;

    let header: Vec<String> = ["stride_index", "t", "median", "q1", "q3", "lo_whisker", "hi_whisker", "outliers"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let rows = report.boxplots.iter().map(|b| {
        vec![
            b.stride_index.to_string(),
            b.t.to_string(),
            fmt_float(b.median),
            fmt_float(b.q1),
            fmt_float(b.q3),
            fmt_float(b.lo_whisker),
            fmt_float(b.hi_whisker),
            b.outliers.iter().map(|&v| fmt_float(v)).collect::<Vec<_>>().join(";"),
        ]
    });
    write_csv(&paths[2], &header, rows)?;

    let header = vec!["edge_id".to_string(), "traversal_count".to_string()];
    let rows = scenario.edge_labels.iter().enumerate().map(|(e, label)| {
        let total: u64 = outcome.runs.iter().map(|r| r.edge_traversal_counts[e]).sum();
        vec![label.clone(), total.to_string()]
    });
    write_csv(&paths[3], &header, rows)?;

    let created_at = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let manifest = json!({
        "config": resolved_config,
        "seeds": (0..outcome.config.n_runs).map(|i| outcome.config.seed(i)).collect::<Vec<_>>(),
        "completed_runs": report.run_indices,
        "excluded_runs": report.excluded,
        "final_mean_cumulative_regret": report.mean_cumulative_regret.last(),
        "timing": {
            "created_at_unix": created_at,
            "run_seconds": outcome.runs.iter().map(|r| r.elapsed_secs).collect::<Vec<_>>(),
        },
    });
    let text = serde_json::to_string_pretty(&manifest).expect("manifest is valid json");
    fs::write(&paths[4], text + "\n").map_err(|source| MetricsError::Io { path: paths[4].clone(), source })?;
    Ok(paths)
}
