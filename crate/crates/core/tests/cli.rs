use std::path::Path;
use std::process::Command;

use radiomatch::harness::{format_edge_list, run_cli};
use radiomatch::Family;
use serde_json::Value;

fn run_to(args: &[&str], out: &Path) -> (i32, String) {
    let mut full = vec!["radiomatch"];
    full.extend_from_slice(args);
    full.extend_from_slice(&["--out", out.to_str().unwrap()]);
    let code = run_cli(full);
    (code, std::fs::read_to_string(out).unwrap_or_default())
}

fn json(args: &[&str]) -> (i32, Value) {
    let dir = tempfile::tempdir().unwrap();
    let (code, body) = run_to(args, &dir.path().join("out.json"));
    (code, serde_json::from_str(&body).unwrap_or(Value::Null))
}

#[test]
fn match_on_generated_graph() {
    let (code, v) = json(&["match", "--gen", "path:5", "--seed", "7", "--trials", "3", "--C", "20"]);
    assert_eq!(code, 0);
    assert_eq!(v["command"], "match");
    assert_eq!(v["graph"]["n"], 5);
    assert_eq!(v["graph"]["m"], 4);
    assert_eq!(v["seed"]["seed"], 7);
    assert_eq!(v["seed"]["defaulted"], false);
    assert_eq!(v["summary"]["trials_completed"], 3);
    assert_eq!(v["summary"]["validity_violations"], 0);
    let trials = v["trials"].as_array().unwrap();
    assert_eq!(trials.len(), 3);
    assert_eq!(trials[2]["seed"], 9);
    for t in trials {
        assert_eq!(t["valid"], true);
        assert_eq!(t["latency_ok"], true);
        assert!(t["wall_ms"].is_number());
    }
}

#[test]
fn seed_default_is_reported() {
    let (_, v) = json(&["match", "--gen", "path:3", "--C", "5", "--omit-timing"]);
    assert_eq!(v["seed"]["defaulted"], true);
    assert!(v["trials"][0].get("wall_ms").is_none());
}

#[test]
fn match_on_edge_list_file() {
    let dir = tempfile::tempdir().unwrap();
    let g = Family::Grid { width: 3, height: 3 }.generate(0).unwrap();
    let path = dir.path().join("grid.txt");
    std::fs::write(&path, format!("# 3x3 grid\n{}", format_edge_list(&g))).unwrap();
    let (code, v) = json(&["match", "--graph", path.to_str().unwrap(), "--seed", "1", "--C", "10", "--history"]);
    assert_eq!(code, 0);
    assert_eq!(v["graph"]["m"], 12);
    assert!(v["graph"]["source"].as_str().unwrap().starts_with("file:"));
    assert_eq!(v["trials"][0]["history_ok"], true);
}

#[test]
fn csv_output() {
    let dir = tempfile::tempdir().unwrap();
    let (code, body) = run_to(
        &["match", "--gen", "complete:6", "--seed", "2", "--trials", "4", "--C", "10", "--format", "csv"],
        &dir.path().join("out.csv"),
    );
    assert_eq!(code, 0);
    let mut lines = body.lines();
    assert!(lines.next().unwrap().starts_with("trial,seed,complete,matching_size"));
    assert_eq!(lines.count(), 4);
}

#[test]
fn random_ids() {
    let (code, v) = json(&["match", "--gen", "erdos_renyi:20,0.3", "--seed", "4", "--C", "10", "--random-ids", "3"]);
    assert_eq!(code, 0);
    assert_eq!(v["config"]["id_mode"]["mode"], "random");
    assert_eq!(v["config"]["id_mode"]["factor"], 3);
}

#[test]
fn zero_budget_marks_trials_incomplete() {
    let (code, v) = json(&["match", "--gen", "path:4", "--trials", "5", "--budget-secs", "0"]);
    assert_eq!(code, 0);
    assert_eq!(v["summary"]["trials_completed"], 0);
    assert!(v["summary"]["maximality_rate"].is_null());
    assert_eq!(v["trials"][0]["complete"], false);
}

#[test]
fn naf_with_load_hint() {
    let (code, v) = json(&["naf", "--gen", "star:4", "--L", "4", "--seed", "3", "--trials", "4", "--C", "20"]);
    assert_eq!(code, 0);
    assert_eq!(v["config"]["k"], 13);
    assert_eq!(v["config"]["load_hint"], 4);
    assert_eq!(v["summary"]["load_bound_violations"], 0);
    assert_eq!(v["summary"]["mean_uncovered_curve"].as_array().unwrap().len(), 14);
}

#[test]
fn naf_needs_k_or_l() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = run_to(&["naf", "--gen", "star:4"], &dir.path().join("x"));
    assert_eq!(code, 2);
}

#[test]
fn oracle_values() {
    let (_, v) = json(&["oracle", "mc", "--gen", "star:3"]);
    assert_eq!(v["value"], 3);
    let (_, v) = json(&["oracle", "nafload", "--gen", "path:4"]);
    assert_eq!(v["value"], 1);
    let (code, v) = json(&["oracle", "pairprob", "--gen", "path:2", "--edge", "0,1", "--r", "0.5"]);
    assert_eq!(code, 0);
    assert_eq!(v["exact"], 0.125);
    assert_eq!(v["bound"], 0.125);
    assert_eq!(v["exact_ge_bound"], true);
    let (_, v) = json(&["oracle", "pairprob", "--gen", "path:4", "--edge", "1,2", "--r", "0.5", "--matched", "0", "--full"]);
    assert_eq!(v["method"], "full");
    assert_eq!(v["residual_max_degree"], 2);
    let (_, v) = json(&["oracle", "greedy", "--gen", "path:4", "--seed", "1"]);
    assert_eq!(v["maximal"], true);
}

#[test]
fn oracle_guard_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = run_to(&["oracle", "mc", "--gen", "path:13"], &dir.path().join("x"));
    assert_eq!(code, 2);
}

#[test]
fn verify_all_connected_graphs_text() {
    let dir = tempfile::tempdir().unwrap();
    let (code, body) = run_to(
        &["oracle", "verify_thm2", "--all-connected-graphs-upto", "6", "--format", "text"],
        &dir.path().join("v.txt"),
    );
    assert_eq!(code, 0);
    assert_eq!(body.trim(), "consistent: 142 graphs, 0 counterexamples");
}

#[test]
fn sweep_grid() {
    let (code, v) = json(&[
        "sweep", "--family", "erdos_renyi:{n},0.3", "--n", "4,8", "--C", "2,8", "--trials", "2", "--seed", "5",
    ]);
    assert_eq!(code, 0);
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[3]["n"], 8);
    assert_eq!(rows[3]["c"], 8.0);
}

#[test]
fn sweep_requires_placeholder() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = run_to(&["sweep", "--family", "path:4", "--n", "4", "--C", "2"], &dir.path().join("x"));
    assert_eq!(code, 2);
}

#[test]
fn binary_writes_to_out_dir_env() {
    let dir = tempfile::tempdir().unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_radiomatch"))
        .args(["oracle", "mc", "--gen", "star:2"])
        .env("RADIOMATCH_OUT_DIR", dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("oracle-mc.json")).unwrap()).unwrap();
    assert_eq!(v["value"], 2);
}

#[test]
fn binary_bad_arguments() {
    let out = Command::new(env!("CARGO_BIN_EXE_radiomatch")).args(["match", "--gen", "nonsense:3"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["naf", "--gen", "grid:3,4", "--k", "4", "--seed", "11", "--trials", "3", "--C", "10", "--omit-timing"];
    let (_, a) = run_to(&args, &dir.path().join("a.json"));
    let (_, b) = run_to(&args, &dir.path().join("b.json"));
    assert!(!a.is_empty());
    assert_eq!(a, b);
}
