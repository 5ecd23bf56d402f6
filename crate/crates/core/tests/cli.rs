use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_minimax-bandit"))
}

fn fixture(name: &str) -> String {
    format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn read_rows(path: &Path) -> Vec<Vec<String>> {
    let mut reader = csv::Reader::from_path(path).unwrap();
    reader
        .records()
        .map(|r| r.unwrap().iter().map(str::to_string).collect())
        .collect()
}

#[test]
fn unknown_flag_exits_one_and_names_the_flag() {
    let out = run(&["simulate", "--no-such-flag", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("--no-such-flag"), "{}", stderr(&out));
}

#[test]
fn missing_graph_file_is_a_config_error() {
    let out = run(&["simulate", "--graph", "/nonexistent/road.csv", "--horizon", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("/nonexistent/road.csv"));
}

#[test]
fn unknown_agent_is_a_config_error() {
    let out = run(&["simulate", "--grid", "2x2", "--agent", "oracle"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("oracle"));
}

#[test]
fn greedy_single_round_on_the_diamond() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "simulate",
        "--config",
        &fixture("diamond.toml"),
        "--agent",
        "greedy",
        "--horizon",
        "1",
        "--runs",
        "1",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).contains("agent=greedy T=1 n_runs=1"), "{}", stdout(&out));
    let rows = read_rows(&dir.path().join("cumulative_regret.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], "1");
    assert_eq!(rows[0][1], rows[0][2], "single-run mean equals the run");
    let exploration = read_rows(&dir.path().join("exploration.csv"));
    assert_eq!(exploration.len(), 5);
    let traversed: u64 = exploration.iter().map(|r| r[1].parse::<u64>().unwrap()).sum();
    assert!((2..=3).contains(&traversed), "an A-D path has 2 or 3 edges, got {traversed}");
}

#[test]
fn metric_files_are_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "simulate", "--grid", "3x3", "--d", "2", "--agent", "lin_ucb", "--horizon", "120", "--runs", "4",
        "--boxplot-stride", "40", "--base-seed", "9", "--out-dir", dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));

    for name in ["cumulative_regret.csv", "instant_regret.csv"] {
        let rows = read_rows(&dir.path().join(name));
        assert_eq!(rows.len(), 120, "{name}");
        for row in &rows {
            let values: Vec<f64> = row[1..].iter().map(|v| v.parse().unwrap()).collect();
            let (runs, mean) = values.split_at(4);
            let expected = runs.iter().sum::<f64>() / 4.0;
            assert!((mean[0] - expected).abs() <= 1e-12 * expected.abs().max(1.0), "{name}: {mean:?} vs {expected}");
        }
    }
    let cumulative = read_rows(&dir.path().join("cumulative_regret.csv"));
    let instant = read_rows(&dir.path().join("instant_regret.csv"));
    for run in 1..=4 {
        let mut acc = 0.0;
        for (c, i) in cumulative.iter().zip(&instant) {
            acc += i[run].parse::<f64>().unwrap();
            assert_eq!(acc, c[run].parse::<f64>().unwrap());
        }
    }

    let boxplot = read_rows(&dir.path().join("boxplot.csv"));
    assert_eq!(boxplot.iter().map(|r| r[1].as_str()).collect::<Vec<_>>(), ["40", "80", "120"]);

    let exploration = read_rows(&dir.path().join("exploration.csv"));
    assert_eq!(exploration.len(), 24);
    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seeds"], serde_json::json!([9, 10, 11, 12]));
    assert_eq!(manifest["config"]["origins"]["horizon"], "flag");
    assert_eq!(manifest["config"]["origins"]["alpha"], "default");
    // Every round of a 3x3 grid walk crosses at least 4 edges.
    let traversed: u64 = exploration.iter().map(|r| r[1].parse::<u64>().unwrap()).sum();
    assert!(traversed >= 4 * 120 * 4);
}

#[test]
fn flags_override_config_file_values() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    fs::write(&config, "grid = \"2x3\"\nhorizon = 7\nruns = 2\nagent = \"bayes_ucb\"\n").unwrap();
    let out_dir = dir.path().join("out");
    let out = run(&[
        "simulate", "--config", config.to_str().unwrap(), "--runs", "3", "--out-dir", out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).contains("agent=bayes_ucb T=7 n_runs=3"), "{}", stdout(&out));
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["origins"]["horizon"], "config_file");
    assert_eq!(manifest["config"]["origins"]["runs"], "flag");
}

#[test]
fn out_dir_can_come_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["simulate", "--grid", "2x2", "--horizon", "3", "--runs", "1"])
        .env("MINIMAX_BANDIT_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config"]["origins"]["out_dir"], "environment");
}

#[test]
fn generate_graph_writes_grid_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("grid.csv");
    let out = run(&["generate-graph", "--grid", "5x5", "--d", "3", "--seed", "7", "--out", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let net = minimax_bandit::environment::load_road_network(&csv).unwrap();
    assert_eq!(net.graph.node_count(), 25);
    assert_eq!(net.graph.edge_count(), 80);
    assert_eq!(net.d, 3);

    let again = dir.path().join("again.csv");
    let out = run(&["generate-graph", "--grid", "5x5", "--d", "3", "--seed", "7", "--out", again.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(fs::read(&csv).unwrap(), fs::read(&again).unwrap());

    let other = dir.path().join("other.csv");
    run(&["generate-graph", "--grid", "5x5", "--d", "3", "--seed", "8", "--out", other.to_str().unwrap()]);
    assert_ne!(fs::read(&csv).unwrap(), fs::read(&other).unwrap());

    // Load and save reproduces the file byte for byte.
    let resaved = dir.path().join("resaved.csv");
    net.save(&resaved).unwrap();
    assert_eq!(fs::read(&csv).unwrap(), fs::read(&resaved).unwrap());

    let sidecar: toml::Table = fs::read_to_string(dir.path().join("grid.toml")).unwrap().parse().unwrap();
    assert_eq!(sidecar["graph"].as_str(), Some("grid.csv"));
    assert_eq!(sidecar["d"].as_integer(), Some(3));

    // The sidecar drives a simulation directly.
    let out_dir = dir.path().join("out");
    let out = run(&[
        "simulate", "--config", dir.path().join("grid.toml").to_str().unwrap(), "--horizon", "5", "--runs", "1",
        "--out-dir", out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
}

#[test]
fn inspect_summarizes_a_road_file() {
    let out = run(&["inspect", &fixture("diamond.toml")]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("4 nodes, 5 edges, d = 3"), "{text}");
    assert!(text.contains("reachable"), "{text}");

    let out = run(&["inspect", &fixture("two_edges.csv"), "--source", "C", "--target", "A"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("3 nodes, 2 edges, d = 5"));
    assert!(stderr(&out).contains("not reachable"));
}

#[test]
fn inspect_reports_the_line_of_a_corrupt_row() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    let mut text = fs::read_to_string(fixture("two_edges.csv")).unwrap();
    text.push_str("s3,C,A,not_a_number,8,1,1,1,1,1,1,1,1,1,1\n");
    fs::write(&path, text).unwrap();
    let out = run(&["inspect", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("line 4"), "{}", stderr(&out));
}

#[test]
fn unreachable_target_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "simulate", "--graph", &fixture("two_edges.csv"), "--source", "C", "--target", "A", "--horizon", "2",
        "--out-dir", dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
    assert!(stderr(&out).contains("not reachable"));
}
