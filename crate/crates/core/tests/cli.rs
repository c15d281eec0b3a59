use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn exe() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ensemble-gop"))
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

fn run(args: &[&str]) -> Output {
    exe().args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

const GOLF: &str = r#"{"objective": {"kind": "golf_course", "center": [0.3], "epsilon": 0.03125}}"#;

#[test]
fn solve_record_echoes_resolved_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "golf.json", GOLF);
    let out = run(&["solve", "--config", &cfg, "--seed", "9"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["tool"], "ensemble-gop");
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["command"], "solve");
    assert_eq!(v["config"]["seed"], 9);
    assert_eq!(v["config"]["safety_c"], 2.0);
    assert_eq!(v["result"]["status"], "success");
    assert_eq!(v["result"]["counters"]["oracle_queries"], 7);
}

#[test]
fn solve_coarse_grid_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "coarse.json",
        r#"{"objective": {"kind": "golf_course", "center": [0.3], "epsilon": 0.03125},
            "basin_override": [0.5]}"#,
    );
    let out = run(&["solve", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["result"]["status"], "search_failed");
}

#[test]
fn usage_and_config_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["solve", "--format", "xml"]).status.code(), Some(1));
    assert_eq!(run(&["solve"]).status.code(), Some(1));
    let typo = write(dir.path(), "typo.json", r#"{"delta_one": 0.1}"#);
    assert_eq!(run(&["solve", "--config", &typo]).status.code(), Some(1));
    let missing = dir.path().join("absent.json");
    assert_eq!(
        run(&["bench", "--config", missing.to_str().unwrap()])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn search_command_and_verification_failure() {
    let dir = tempfile::tempdir().unwrap();
    let hit = write(
        dir.path(),
        "hit.json",
        r#"{"search": {"n_padded": 256, "marked": [77]}}"#,
    );
    let out = run(&["search", "--config", &hit]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["result"]["found"], 77);
    assert_eq!(v["result"]["total_queries"], 9);

    let empty = write(
        dir.path(),
        "empty.json",
        r#"{"search": {"n_padded": 16, "marked": []}}"#,
    );
    let out = run(&["search", "--config", &empty]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["result"]["verified"], false);

    let odd = write(
        dir.path(),
        "odd.json",
        r#"{"search": {"n_padded": 12, "marked": [1]}}"#,
    );
    assert_eq!(run(&["search", "--config", &odd]).status.code(), Some(1));
}

#[test]
fn csv_outputs_have_versioned_headers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "golf.json", GOLF);
    let out = run(&["solve", "--config", &cfg, "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "# ensemble-gop solve v1");
    assert_eq!(
        lines[1],
        "k,lo,hi,partition_size,n_e,mean_signal,threshold,decision"
    );
    assert_eq!(lines.len(), 2 + 6);

    let out = run(&["compare", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("# ensemble-gop compare v1\nn_items,delta1,"));
    assert_eq!(text.lines().count(), 2 + 15);
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "golf.json", GOLF);
    let dest = dir.path().join("result.json");
    let out = run(&[
        "validate",
        "--config",
        &cfg,
        "--out",
        dest.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&dest).unwrap()).unwrap();
    assert_eq!(v["result"]["unique_min_zero"], true);
    assert_eq!(v["config"]["output"]["path"], dest.to_str().unwrap());
}

#[test]
fn validate_accepts_builtin_objectives() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "two.json",
        r#"{"objective": {"kind": "multiwell", "centers": [[0.2], [0.8]], "depths": [0.0, 0.05]},
            "delta": 0.05}"#,
    );
    let out = run(&["validate", "--config", &cfg]);
    let v = json(&out);
    assert_eq!(v["result"]["gap_holds"], true);
    assert_eq!(out.status.code(), Some(0), "{v}");

    let halved = write(
        dir.path(),
        "halved.json",
        r#"{"objective": {"kind": "golf_course", "center": [0.5], "epsilon": 0.25},
            "delta": 0.5, "validate": {"resolution": 512}}"#,
    );
    assert_eq!(
        run(&["validate", "--config", &halved]).status.code(),
        Some(0)
    );
}

#[test]
fn bench_seed_changes_realized_positions_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "bench.json",
        r#"{"bench": {"bits": [4, 6, 8], "delta1": [0.0, 0.01], "runs": 4}}"#,
    );
    let a = json(&run(&["bench", "--config", &cfg, "--seed", "1"]));
    let b = json(&run(&["bench", "--config", &cfg, "--seed", "2"]));
    let rows = a["result"]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 6);
    for (x, y) in rows.iter().zip(b["result"]["rows"].as_array().unwrap()) {
        assert_eq!(x["predicted_queries"], y["predicted_queries"]);
        assert_eq!(x["accounting_exact"], true);
    }
}
