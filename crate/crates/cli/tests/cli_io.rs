//! Integration tests for configuration loading, result files and the JSON
//! summary round trip.

use std::path::Path;

use wqnet_cli::config::{load_config, preset, ExperimentKind, RunConfig};
use wqnet_cli::runner::execute;

fn repo_config(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

#[test]
fn shipped_example_configs_load() {
    let sim = load_config(&repo_config("two_atom_example.toml")).unwrap();
    assert_eq!(sim.experiment, ExperimentKind::Simulate);
    assert_eq!(sim.to_network().atom_count(), 2);
    let eq = load_config(&repo_config("equivalence_example.toml")).unwrap();
    assert_eq!(eq.experiment, ExperimentKind::Equivalence);
}

#[test]
fn parse_errors_are_position_annotated() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.toml");
    std::fs::write(&path, "experiment = \"simulate\"\ndt = ]broken[\n").unwrap();
    let err = load_config(&path).unwrap_err().to_string();
    assert!(err.contains("line 2"), "{err}");
}

#[test]
fn validation_failures_are_collected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("invalid.toml");
    std::fs::write(
        &path,
        r#"
experiment = "simulate"
dt = -0.5
initial = "ee"
[network]
kind = "semi-infinite"
port = "infinite-left"
[[network.atoms]]
points = [{ tau = -1.0, phi = 0.0, gamma_l = 0.2, gamma_r = 0.2 }]
"#,
    )
    .unwrap();
    let err = load_config(&path).unwrap_err().to_string();
    for needle in ["dt", "port", "tau", "initial state"] {
        assert!(err.contains(needle), "missing {needle:?} in {err}");
    }
}

#[test]
fn simulate_writes_csv_and_round_trips_the_summary() {
    let dir = tempfile::tempdir().unwrap();
    let config = preset("single-decay").unwrap().config;
    let out = execute(&config, Some(dir.path()), "single-decay", false).unwrap();
    assert!(out.files.iter().any(|p| p.ends_with("simulate_single-decay.csv")));

    let csv = std::fs::read_to_string(dir.path().join("simulate_single-decay.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "time,exc1,sz1");
    // t_end 25 μs at dt 0.5 plus the initial point.
    assert_eq!(lines.count(), 51);

    let summary: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("simulate_single-decay_summary.json")).unwrap(),
    )
    .unwrap();
    let echoed: RunConfig = serde_json::from_value(summary["config"].clone()).unwrap();
    assert_eq!(echoed, config);
    assert!(summary["invariants"]["max_trace_deviation"].as_f64().unwrap() < 1e-6);
    assert!(summary["wall_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn filter_writes_mean_stderr_pairs_and_trajectories() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = preset("fig2b").unwrap().config;
    config.trajectories = 4;
    config.workers = 2;
    config.t_end = 5.0;
    let out = execute(&config, Some(dir.path()), "quick", true).unwrap();
    let csv = std::fs::read_to_string(dir.path().join("filter_quick.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    assert_eq!(
        header,
        "time,pop_eg_mean,pop_eg_stderr,pop_ge_mean,pop_ge_stderr,sz1_mean,sz1_stderr,sz2_mean,sz2_stderr"
    );
    assert_eq!(csv.lines().count(), 12); // header + 11 grid points
    for k in 0..4 {
        let path = dir.path().join(format!("filter_quick_traj{k}.csv"));
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.lines().next().unwrap().starts_with("time,dw,dy,pop_eg"));
    }
    let summary: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("filter_quick_summary.json")).unwrap(),
    )
    .unwrap();
    let echoed: RunConfig = serde_json::from_value(summary["config"].clone()).unwrap();
    assert_eq!(echoed, config);
    assert_eq!(out.files.len(), 1 + 4 + 1);
}

#[test]
fn classify_reports_witness() {
    let config = RunConfig { experiment: ExperimentKind::Classify, ..preset("fig3a").unwrap().config };
    let out = execute(&config, None, "fig3a", false).unwrap();
    assert_eq!(out.summary["verdict"], "NonMarkovian");
    assert_eq!(out.summary["witness"]["kind"], "delayed-term");
    assert!(out.text.contains("NonMarkovian"));
}

#[test]
fn kernels_report_includes_ito_table() {
    let config = RunConfig { experiment: ExperimentKind::Kernels, ..preset("fig3a").unwrap().config };
    let out = execute(&config, None, "fig3a", false).unwrap();
    assert!(out.summary["kernels"]["ito_table"]["entries"].is_array());
    assert!(out.text.contains("Itô table"));
}

#[test]
fn equivalence_runs_from_shipped_config() {
    let config = load_config(&repo_config("equivalence_example.toml")).unwrap();
    let out = execute(&config, None, "example", false).unwrap();
    assert_eq!(out.summary["verdict"], "Equivalent");
}
