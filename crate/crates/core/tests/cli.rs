use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sketch-anomaly"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn generate(dir: &Path) {
    let out = run(dir, &["generate", "--n", "300", "--d", "20", "--k", "3", "--seed", "2", "--output", "a.csv", "--labels", "y.txt"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

fn json(dir: &Path, file: &str) -> Value {
    serde_json::from_slice(&std::fs::read(dir.join(file)).unwrap()).unwrap()
}

#[test]
fn generate_writes_data_and_labels() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path());
    let data = std::fs::read_to_string(dir.path().join("a.csv")).unwrap();
    assert_eq!(data.lines().count(), 300);
    assert_eq!(data.lines().next().unwrap().split(',').count(), 20);
    let labels = std::fs::read_to_string(dir.path().join("y.txt")).unwrap();
    assert_eq!(labels.lines().count(), 300);
    assert!(labels.lines().all(|l| l == "0" || l == "1"));
}

#[test]
fn score_emits_one_record_per_row() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    generate(d);
    let out = run(d, &["score", "--k", "3", "--input", "a.csv", "--output", "s.json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(d, "s.json");
    let arr = v.as_array().unwrap();
    assert_eq!(arr.len(), 300);
    assert_eq!(arr[7]["row_index"], 7);
    assert_eq!(arr[0]["mode"], "exact-batch");
    let sum: f64 = arr.iter().map(|r| r["rank_k_leverage"].as_f64().unwrap()).sum();
    assert!((sum - 3.0).abs() < 1e-8);
}

#[test]
fn score_to_stdout() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path());
    let out = run(dir.path(), &["score", "--mode", "fd", "--k", "2", "--ell", "8", "--input", "a.csv"]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 300);
    assert_eq!(v[0]["mode"], "sketched-batch");
}

#[test]
fn sketch_then_score_matches_full_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    generate(d);
    for (mode, extra) in [("fd", false), ("rproj", false), ("colsample", true)] {
        let full = run(d, &["score", "--mode", mode, "--k", "3", "--ell", "10", "--seed", "5", "--input", "a.csv", "--output", "full.json"]);
        assert_eq!(full.status.code(), Some(0), "{mode}");
        let resume = if extra {
            assert_eq!(run(d, &["sketch", "--mode", mode, "--ell", "10", "--seed", "5", "--input", "a.csv", "--output", "plan.bin"]).status.code(), Some(0));
            assert_eq!(
                run(d, &["sketch", "--mode", mode, "--ell", "10", "--seed", "5", "--plan", "plan.bin", "--input", "a.csv", "--output", "state.bin"]).status.code(),
                Some(0)
            );
            run(d, &["score", "--k", "3", "--sketch", "state.bin", "--plan", "plan.bin", "--input", "a.csv", "--output", "resumed.json"])
        } else {
            assert_eq!(run(d, &["sketch", "--mode", mode, "--ell", "10", "--seed", "5", "--input", "a.csv", "--output", "state.bin"]).status.code(), Some(0));
            run(d, &["score", "--k", "3", "--sketch", "state.bin", "--input", "a.csv", "--output", "resumed.json"])
        };
        assert_eq!(resume.status.code(), Some(0), "{mode}: {}", String::from_utf8_lossy(&resume.stderr));
        assert_eq!(json(d, "full.json"), json(d, "resumed.json"), "{mode}");
    }
}

#[test]
fn eval_report_fields() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    generate(d);
    let out = run(d, &["eval", "--mode", "rproj", "--k", "3", "--ell", "12", "--eta", "0.05", "--seeds", "3", "--ell-grid", "6,12", "--plot-csv", "curve.csv", "--input", "a.csv", "--output", "e.json"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(d, "e.json");
    for key in ["f1", "best_eta_prime", "precision", "recall"] {
        let x = v[key].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&x) || key == "best_eta_prime", "{key} = {x}");
    }
    assert_eq!(v["per_seed"].as_array().unwrap().len(), 3);
    let curve = std::fs::read_to_string(d.join("curve.csv")).unwrap();
    let lines: Vec<&str> = curve.lines().collect();
    assert_eq!(lines[0], "ell,f1");
    assert_eq!(lines.len(), 3);
}

#[test]
fn eval_exact_is_perfect() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    generate(d);
    let out = run(d, &["eval", "--k", "3", "--eta", "0.05", "--input", "a.csv"]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["f1"].as_f64(), Some(1.0));
}

#[test]
fn verify_writes_jsonl_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = run(d, &["verify", "--suite", "diag", "--seeds", "4", "--output", "v.jsonl"]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(d.join("v.jsonl")).unwrap();
    assert_eq!(text.lines().count(), 4);
    for line in text.lines() {
        let v: Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["bound_name"], "diag_dominance");
        assert_eq!(v["pass"], true);
    }
}

#[test]
fn usage_and_data_errors() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(run(d, &["score", "--k", "3"]).status.code(), Some(1));
    assert_eq!(run(d, &["verify", "--suite", "nope"]).status.code(), Some(1));
    assert_eq!(run(d, &["score", "--k", "3", "--input", "missing.csv"]).status.code(), Some(2));
    std::fs::write(d.join("bad.csv"), "1,2\n3,x\n").unwrap();
    let out = run(d, &["score", "--k", "1", "--input", "bad.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
    generate(d);
    // k must be below ell.
    assert_eq!(run(d, &["score", "--mode", "fd", "--k", "5", "--ell", "5", "--input", "a.csv"]).status.code(), Some(1));
    assert_eq!(run(d, &["--help"]).status.code(), Some(0));
}
