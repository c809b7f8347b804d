use std::path::Path;
use std::process::{Command, Output};

use tempfile::tempdir;

const BIN: &str = env!("CARGO_BIN_EXE_aklt-mite");

fn run(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("AKLT_MITE_THREADS")
        .output()
        .expect("binary runs")
}

fn data_rows(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

/// Golden comparison: integers exactly, floats to 1e-9. Last-bit results
/// depend on the optimization level the binary was built with.
fn assert_rows_close(actual: &[&str], expected: &[&str]) {
    assert_eq!(actual.len(), expected.len());
    assert_eq!(actual[0], expected[0]);
    for (a, e) in actual.iter().zip(expected).skip(1) {
        let (a, e): (Vec<&str>, Vec<&str>) = (a.split(',').collect(), e.split(',').collect());
        assert_eq!(a.len(), e.len());
        for (x, y) in a.iter().zip(&e) {
            if x.contains(['.', 'e']) || y.contains(['.', 'e']) {
                let (x, y): (f64, f64) = (x.parse().unwrap(), y.parse().unwrap());
                assert!((x - y).abs() <= 1e-9, "{x} vs {y}");
            } else {
                assert_eq!(x, y);
            }
        }
    }
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn same_seed_gives_identical_files_across_thread_counts() {
    let dir = tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let common = ["prepare", "--n", "4", "--runs", "6", "--rounds", "8", "--seed", "1"];
    let out = run(&[&common[..], &["--threads", "1", "--out", a.to_str().unwrap()]].concat());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = run(&[&common[..], &["--threads", "4", "--out", b.to_str().unwrap()]].concat());
    assert!(out.status.success());
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let sa = dir.path().join("a.csv.summary.json");
    let sb = dir.path().join("b.csv.summary.json");
    assert_eq!(std::fs::read(sa).unwrap(), std::fs::read(sb).unwrap());
}

#[test]
fn different_seeds_differ() {
    let a = run(&["prepare", "--n", "3", "--runs", "2", "--rounds", "3", "--seed", "1"]);
    let b = run(&["prepare", "--n", "3", "--runs", "2", "--rounds", "3", "--seed", "2"]);
    assert_ne!(data_rows(&String::from_utf8_lossy(&a.stdout)), data_rows(&String::from_utf8_lossy(&b.stdout)));
}

#[test]
fn prepare_matches_golden_file() {
    let out = run(&["prepare", "--n", "3", "--runs", "2", "--rounds", "4", "--seed", "7"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let golden = include_str!("golden/prepare_n3_seed7.csv");
    assert_rows_close(&data_rows(&text), &data_rows(golden));
}

#[test]
fn project_matches_golden_file() {
    let out = run(&["project", "--sites", "3,4,5", "--rounds", "4"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let golden = include_str!("golden/project_n3_5.csv");
    assert_rows_close(&data_rows(&text), &data_rows(golden));
    assert_eq!(data_rows(&text)[0], "N,r,F_tot");
}

#[test]
fn header_block_allows_replay() {
    let dir = tempdir().unwrap();
    let first = dir.path().join("first.csv");
    let out = run(&["prepare", "--n", "3", "--runs", "2", "--rounds", "3", "--seed", "5", "--out", first.to_str().unwrap()]);
    assert!(out.status.success());
    let text = read(&first);
    let config_line = text.lines().find_map(|l| l.strip_prefix("# config=")).unwrap();
    let cfg_path = dir.path().join("replay.json");
    std::fs::write(&cfg_path, config_line).unwrap();
    let second = dir.path().join("second.csv");
    let out = run(&["prepare", "--config", cfg_path.to_str().unwrap(), "--out", second.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(text, read(&second));
}

#[test]
fn invalid_chain_length_is_rejected_without_output() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    let out = run(&["prepare", "--n", "2", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("N = 2"));
    assert!(!path.exists());
    assert!(!dir.path().join("bad.csv.summary.json").exists());

    let out = run(&["prepare", "--mode", "qubit", "--n", "9"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["prepare", "--runs", "0"]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["prepare", "--n", "four"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn config_file_is_versioned_and_overridden_by_flags() {
    let dir = tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"schema_version": 1, "n": 5, "runs": 1, "mite": {"r_max": 2}}"#).unwrap();
    let out = run(&["prepare", "--config", cfg.to_str().unwrap(), "--n", "3"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains(r#""n":3"#));
    assert_eq!(data_rows(&text).len(), 1 + 3);

    std::fs::write(&cfg, r#"{"n": 5}"#).unwrap();
    assert_eq!(run(&["prepare", "--config", cfg.to_str().unwrap()]).status.code(), Some(1));
    let missing = dir.path().join("missing.json");
    assert_eq!(run(&["prepare", "--config", missing.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn zero_noise_reduces_to_prepare() {
    let args = ["--n", "4", "--runs", "3", "--rounds", "6", "--seed", "11"];
    let p = run(&[&["prepare"][..], &args[..]].concat());
    let z = run(&[&["noise", "--sigma2", "0", "--axis", "x"][..], &args[..]].concat());
    assert!(p.status.success() && z.status.success());
    let p = String::from_utf8(p.stdout).unwrap();
    let z = String::from_utf8(z.stdout).unwrap();
    assert_eq!(data_rows(&p), data_rows(&z));
}

#[test]
fn noise_without_spec_is_a_config_error() {
    assert_eq!(run(&["noise", "--n", "3"]).status.code(), Some(1));
    assert_eq!(run(&["noise", "--n", "3", "--sigma2", "-1"]).status.code(), Some(1));
}

#[test]
fn jsonl_starts_with_header_object() {
    let out = run(&["prepare", "--n", "3", "--runs", "1", "--rounds", "2", "--format", "jsonl"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines[0]["header"]["tool"], "aklt-mite");
    assert!(lines[0]["header"]["config_sha256"].as_str().unwrap().len() == 64);
    assert_eq!(lines.len(), 1 + 3);
    assert_eq!(lines[1]["r"], 0);
}

#[test]
fn recompile_writes_one_row_per_repetition() {
    let out = run(&["recompile", "--layers", "1,2", "--runs", "2", "--max-iters", "5", "--hops", "1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let rows = data_rows(&text);
    assert_eq!(rows[0], "n_L,repetition,final_fidelity,hops_used");
    assert_eq!(rows.len(), 1 + 4);
    assert!(rows[1].starts_with("1,0,"));
    assert!(rows[4].starts_with("2,1,"));
    let summary: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(summary["summary"]["min_layers_for_exact"], 8);
    assert_eq!(summary["summary"]["depths"][1]["cnot_count"], 4);
}

#[test]
fn verify_passes_and_lists_named_checks() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("report.json");
    let out = run(&["verify", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_str(&read(&path)).unwrap();
    assert_eq!(report["passed"], true);
    assert!(report["checks"].as_array().unwrap().len() >= 12);
}

#[test]
fn verify_detects_half_kraus_fault() {
    let out = run(&["verify", "--inject-fault", "half-kraus"]);
    assert_eq!(out.status.code(), Some(3));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let failed: Vec<&str> = report["failed"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert!(failed.contains(&"kraus_completeness"));
}

#[test]
fn help_and_version_exit_cleanly() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
    assert!(!String::from_utf8_lossy(&run(&["verify", "--help"]).stdout).contains("inject"));
}
