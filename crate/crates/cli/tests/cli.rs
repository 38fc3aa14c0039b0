use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn example(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../docs/examples").join(name)
}

fn gkls(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gkls"))
        .env("SOURCE_DATE_EPOCH", "0")
        .arg("--quiet")
        .args(args)
        .output()
        .expect("binary runs")
}

fn json_result(out: &Output) -> Value {
    let v: Value = serde_json::from_slice(&out.stdout).expect("stdout is JSON");
    v["result"].clone()
}

fn matrix_re(m: &Value) -> Vec<Vec<f64>> {
    serde_json::from_value(m["re"].clone()).unwrap()
}

#[test]
fn witness_exit_codes() {
    assert_eq!(gkls(&["witness", "--d", "2", "--times", "1,2,2"]).status.code(), Some(0));
    assert_eq!(gkls(&["witness", "--d", "2", "--times", "0.1,2,2"]).status.code(), Some(1));
    assert_eq!(gkls(&["witness", "--d", "2", "--times", "1,2"]).status.code(), Some(2));
    assert_eq!(gkls(&["witness", "--d", "2", "--times", "1,-2,2"]).status.code(), Some(2));
}

#[test]
fn inconsistent_witness_reports_projection() {
    let out = gkls(&["witness", "--d", "2", "--times", "0.1,2,2"]);
    let r = json_result(&out);
    assert_eq!(r["witness"]["verdict"], "INCONSISTENT");
    let x: Vec<f64> = serde_json::from_value(r["nearest_consistent_rates"].clone()).unwrap();
    let sum: f64 = x.iter().sum();
    assert!(x.iter().all(|&v| v >= 0.0 && sum >= std::f64::consts::SQRT_2 * v - 1e-9), "{x:?}");
}

#[test]
fn check_exit_codes() {
    let ok = gkls(&["check", example("dephasing_d2.json").to_str().unwrap()]);
    assert_eq!(ok.status.code(), Some(0));
    assert_eq!(json_result(&ok)["report"]["verdict"], "satisfied");

    let non_cp = gkls(&["check", example("non_cp_d2.json").to_str().unwrap()]);
    assert_eq!(non_cp.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&non_cp.stderr).contains("positive semidefinite"));

    let missing = gkls(&["check", "/nonexistent/generator.json"]);
    assert_eq!(missing.status.code(), Some(2));
    assert_eq!(gkls(&["sample", "--d", "1", "--n", "3"]).status.code(), Some(2));
    assert_eq!(gkls(&["no-such-command"]).status.code(), Some(2));
}

#[test]
fn malformed_json_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\"d\": 2, \"H\": ").unwrap();
    let out = gkls(&["build", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
}

#[test]
fn lindblad_input_builds_matrix_form() {
    let from_ops = json_result(&gkls(&["build", example("dephasing_d2_lindblad.json").to_str().unwrap()]));
    let direct = json_result(&gkls(&["build", example("dephasing_d2.json").to_str().unwrap()]));
    let a = matrix_re(&from_ops["generator"]["C"]);
    let b = matrix_re(&direct["generator"]["C"]);
    for (ra, rb) in a.iter().zip(&b) {
        for (x, y) in ra.iter().zip(rb) {
            assert!((x - y).abs() < 1e-12);
        }
    }
    assert!((from_ops["trace_c"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn build_output_rebuilds_to_itself() {
    let first = gkls(&["build", example("random_d3_seed2024.json").to_str().unwrap()]);
    assert!(first.status.success());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("canonical.json");
    std::fs::write(&path, serde_json::to_vec(&json_result(&first)["generator"]).unwrap()).unwrap();
    let second = gkls(&["build", path.to_str().unwrap()]);
    assert_eq!(json_result(&first)["generator"], json_result(&second)["generator"]);
}

#[test]
fn spectrum_csv_encodes_infinite_times() {
    let out = gkls(&["--output", "csv", "spectrum", example("dephasing_d2.json").to_str().unwrap()]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# manifest: {"));
    assert_eq!(lines.next(), Some("rate,time,frequency"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[2], "0.0,inf,0.0");
}

#[test]
fn sample_output_is_reproducible() {
    let args = ["sample", "--d", "3", "--n", "200", "--seed", "99"];
    let a = gkls(&args);
    let b = gkls(&[&args[..], &["--serial"]].concat());
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let other = gkls(&["sample", "--d", "3", "--n", "200", "--seed", "100"]);
    assert_ne!(a.stdout, other.stdout);
}

#[test]
fn emitted_generator_matches_example() {
    let out = gkls(&["sample", "--d", "3", "--n", "1", "--seed", "2024", "--emit-generator", "0"]);
    assert!(out.status.success());
    let emitted: Value = serde_json::from_slice(&out.stdout).unwrap();
    let stored: Value = serde_json::from_slice(&std::fs::read(example("random_d3_seed2024.json")).unwrap()).unwrap();
    let generator = if emitted.get("result").is_some() { emitted["result"]["generator"].clone() } else { emitted };
    assert_eq!(generator, stored);
}

#[test]
fn out_file_written_atomically() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("report.json");
    let ok = gkls(&["--out", target.to_str().unwrap(), "check", example("dephasing_d2.json").to_str().unwrap()]);
    assert!(ok.status.success());
    assert!(ok.stdout.is_empty());
    let written: Value = serde_json::from_slice(&std::fs::read(&target).unwrap()).unwrap();
    assert_eq!(written["manifest"]["command"], "check");
    assert_eq!(written["manifest"]["timestamp"], 0);
    assert_eq!(written["manifest"]["inputs"][0]["sha256"].as_str().unwrap().len(), 64);

    let failed = dir.path().join("failed.json");
    let bad = gkls(&["--out", failed.to_str().unwrap(), "check", "/nonexistent.json"]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(!failed.exists());
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn evolve_plus_state_decoheres() {
    let out = gkls(&[
        "--output",
        "csv",
        "evolve",
        example("dephasing_d2.json").to_str().unwrap(),
        "--state",
        "plus",
        "--t-max",
        "2",
        "--n-points",
        "3",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for row in text.lines().skip(2) {
        let cols: Vec<f64> = row.split(',').map(|c| c.parse().unwrap()).collect();
        assert!((cols[3] - 0.5 * (-cols[0]).exp()).abs() < 1e-9, "{row}");
    }
}

#[test]
fn proofcheck_passes_on_examples() {
    for name in ["dephasing_d2.json", "depolarizing_d2.json", "random_d3_seed2024.json"] {
        let out = gkls(&["proofcheck", example(name).to_str().unwrap(), "--commutator-pairs", "200", "--seed", "3"]);
        assert_eq!(out.status.code(), Some(0), "{name}: {}", String::from_utf8_lossy(&out.stderr));
        assert_eq!(json_result(&out)["proof"]["pass"], true);
    }
}
