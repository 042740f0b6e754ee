//! End-to-end runs of the binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn demo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/demo.json")
}

fn slicebed(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_slicebed"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

#[test]
fn validate_accepts_the_demo() {
    let out = slicebed(&["validate", path(&demo())]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("ok: 3 operators, 7 nodes (5 function nodes), 16 directed links"));
}

#[test]
fn solve_with_both_engines() {
    let out = slicebed(&[
        "solve",
        "--scenario",
        path(&demo()),
        "--engine",
        "nl",
        "--engine",
        "pl",
        "--k-paths",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let results = v["results"].as_array().unwrap();
    assert_eq!(results.len(), 2);
    let nl = results[0]["cost"].as_f64().unwrap();
    let pl = results[1]["cost"].as_f64().unwrap();
    assert!(pl >= nl);
    for r in results {
        assert_eq!(r["check"], "ok");
    }
}

#[test]
fn blocked_solve_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let request = dir.path().join("tight.json");
    std::fs::write(
        &request,
        r#"{
  "id": 9,
  "services": [{"id": 0, "source": 0, "sink": 4, "vnf_sequence": [0], "bandwidth": 1, "max_latency": 3}],
  "vnf_catalog": [{"vnf": 0, "aggregate_bandwidth": 1, "candidate_nodes": [0, 2, 3, 4, 6]}],
  "trust_spec": {"origin": 1, "allow": [3]}
}"#,
    )
    .unwrap();
    let out = slicebed(&[
        "solve",
        "--scenario",
        path(&demo()),
        "--slice",
        path(&request),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["results"][0]["admitted"], false);
}

#[test]
fn simulate_without_arrivals() {
    let dir = tempfile::tempdir().unwrap();
    let out = slicebed(&[
        "simulate",
        "--scenario",
        path(&demo()),
        "--lambda",
        "0",
        "--out",
        path(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let run = std::fs::read_dir(dir.path())
        .unwrap()
        .next()
        .unwrap()
        .unwrap()
        .path();
    let summary: Value =
        serde_json::from_str(&std::fs::read_to_string(run.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["by_type"]["all"]["offered"], 0);
    assert_eq!(summary["by_type"]["all"]["blocking_probability"], 0.0);
}

#[test]
fn gen_then_compare() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("s.json");
    let out = slicebed(&[
        "gen",
        "--seed",
        "4",
        "--operators",
        "2",
        "--nodes-per-operator",
        "5",
        "--horizon",
        "30",
        "--out",
        path(&scenario),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let runs = dir.path().join("runs");
    let out = slicebed(&[
        "compare",
        "--scenario",
        path(&scenario),
        "--engine",
        "nl",
        "--engine",
        "pl",
        "--k-paths",
        "1",
        "--k-paths",
        "4",
        "--seeds",
        "1..3",
        "--out",
        path(&runs),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summary = String::from_utf8(out.stdout).unwrap();
    assert_eq!(summary.lines().count(), 4);
    let csv = std::fs::read_to_string(runs.join("compare.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3 * 2);
}

#[test]
fn dump_expanded_prints_dot() {
    let out = slicebed(&[
        "dump-expanded",
        "--scenario",
        path(&demo()),
        "--service",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let dot = String::from_utf8(out.stdout).unwrap();
    assert!(dot.starts_with("digraph"));
    assert!(dot.contains("layer 2"));
}

#[test]
fn input_errors_exit_with_two() {
    assert_eq!(
        slicebed(&["validate", "/nonexistent.json"]).status.code(),
        Some(2)
    );
    assert_eq!(
        slicebed(&["simulate", "--scenario", path(&demo()), "--no-such-flag"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        slicebed(&["compare", "--scenario", path(&demo()), "--seeds", "5..2"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        slicebed(&["solve", "--scenario", path(&demo()), "--engine", "milp"])
            .status
            .code(),
        Some(2)
    );
}
