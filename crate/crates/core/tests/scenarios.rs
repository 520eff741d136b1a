//! End-to-end scenario runs through the report and file layer.

use std::collections::BTreeMap;

use gravicollapse::grid::read_snapshot_binary;
use gravicollapse::scenarios::{
    emit_report, parse_config, run_scenario, ScenarioConfig, ScenarioKind,
};

fn small_unravel(seed: u64) -> ScenarioConfig {
    parse_config(&format!(
        r#"{{
            "scenario": "unravel-ensemble",
            "g": 16.0,
            "n": 64,
            "length": 12.0,
            "separation": 4.0,
            "width": 0.5,
            "dt": 0.004,
            "steps": 20,
            "record_stride": 5,
            "ensemble_size": 24,
            "seed": {seed}
        }}"#
    ))
    .unwrap()
}

fn artifact_map(cfg: &ScenarioConfig) -> BTreeMap<String, Vec<u8>> {
    let rep = run_scenario(cfg).unwrap();
    rep.artifacts
        .into_iter()
        .map(|a| (a.path, a.bytes))
        .collect()
}

#[test]
fn report_directory_holds_echo_summary_and_trajectories() {
    let cfg = small_unravel(5);
    let rep = run_scenario(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let written = emit_report(&rep, dir.path()).unwrap();
    assert_eq!(written.len(), 2 + rep.artifacts.len());
    for name in [
        "report.json",
        "config.json",
        "ensemble_summary.json",
        "trajectories/traj_00000.csv",
    ] {
        assert!(dir.path().join(name).is_file(), "missing {name}");
    }

    let echo = std::fs::read_to_string(dir.path().join("config.json")).unwrap();
    let reparsed = parse_config(&echo).unwrap();
    assert_eq!(reparsed.hash(), rep.provenance.config_hash);
    assert_eq!(reparsed.scenario, Some(ScenarioKind::UnravelEnsemble));

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap())
            .unwrap();
    assert_eq!(report["provenance"]["seed"], 5);
    assert!(report["metrics"]["consistency"]["frac_beyond_3se"].is_number());
    let traj = std::fs::read_to_string(dir.path().join("trajectories/traj_00023.csv")).unwrap();
    assert_eq!(traj.lines().count(), 1 + 5);
}

#[test]
fn same_seed_reproduces_every_artifact() {
    let a = artifact_map(&small_unravel(11));
    let b = artifact_map(&small_unravel(11));
    assert_eq!(a, b);
    let c = artifact_map(&small_unravel(12));
    assert_ne!(a["ensemble_summary.json"], c["ensemble_summary.json"]);
}

#[test]
fn evolution_snapshot_reads_back() {
    let cfg = parse_config(
        r#"{"scenario": "sne-evolve", "n": 64, "length": 12.0, "width": 0.7, "dt": 0.01, "steps": 30, "padding": 3}"#,
    )
    .unwrap();
    let rep = run_scenario(&cfg).unwrap();
    let bin = rep
        .artifacts
        .iter()
        .find(|a| a.path == "final_state.bin")
        .unwrap();
    let snap = read_snapshot_binary(bin.bytes.as_slice(), 3).unwrap();
    assert!((snap.time - 0.3).abs() < 1e-12);
    assert_eq!(snap.state.grid().n(), 64);
    assert!((snap.state.norm_sq() - 1.0).abs() < 1e-12);
    let csv = rep
        .artifacts
        .iter()
        .find(|a| a.path == "final_state.csv")
        .unwrap();
    assert_eq!(String::from_utf8_lossy(&csv.bytes).lines().count(), 1 + 64);
}
