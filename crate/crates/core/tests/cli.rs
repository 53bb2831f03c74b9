use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn indexlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_indexlab")).args(args).env("INDEXLAB_THREADS", "1").output().expect("spawn indexlab")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("json report on stdout")
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

#[test]
fn toeplitz_shift_reports_index_minus_one() {
    let out = indexlab(&["toeplitz", "--symbol", "z"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["kind"], "toeplitz");
    assert_eq!(r["passed"], true);
    let row = &r["results"][0];
    assert_eq!(row["index"], -1);
    assert_eq!(row["winding"], 1);
    assert_eq!(row["theorem_check"], true);
}

#[test]
fn non_invertible_symbol_is_a_config_error() {
    let out = indexlab(&["toeplitz", "--symbol", "1+z"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("invertible"));
}

#[test]
fn corrupted_symbol_file_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let sym = dir.path().join("bad.json");
    write(&sym, r#"{"l": 1, "coeffs": [{"k": 0, "re": [[1.0]]"#);
    let out_dir = dir.path().join("out");
    let out = indexlab(&["toeplitz", "--symbol", sym.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    assert!(!out_dir.join("report.json").exists());
}

#[test]
fn symbol_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let sym = dir.path().join("phi.json");
    write(&sym, r#"{"l": 1, "coeffs": [{"k": -2, "re": [[3.0]], "im": [[0.0]]}, {"k": -1, "re": [[1.0]], "im": [[0.0]]}]}"#);
    let out = indexlab(&["toeplitz", "--symbol", sym.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["results"][0]["index"], 2);
}

#[test]
fn bounds_writes_report_and_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = indexlab(&["bounds", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("all bounds hold"));
    let saved: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(saved, report(&out));
    let table = std::fs::read_to_string(dir.path().join("bounds.csv")).unwrap();
    assert!(table.lines().count() > 1);
}

#[test]
fn pairing_table_matches_index() {
    let dir = tempfile::tempdir().unwrap();
    let out = indexlab(&["pairing", "--symbol", "z", "--symbol", "z^-2(3+z)", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    let rows: Vec<&Value> = r["results"].as_array().unwrap().iter().filter(|v| v.get("symbol").is_some()).collect();
    assert_eq!(rows.len(), 2);
    for row in rows {
        assert_eq!(row["agree"], true);
    }
    assert!(r["results"][2]["cocycle_identities"]["hochschild"].as_f64().unwrap() < 1e-10);
    let mut csv = csv::Reader::from_path(dir.path().join("table.csv")).unwrap();
    assert_eq!(csv.records().count(), 2);
}

#[test]
fn runs_are_byte_identical() {
    let a = indexlab(&["cylinder", "--symbol", "z^2", "--symbol", "diag(z,3+z)"]);
    let b = indexlab(&["cylinder", "--symbol", "z^2", "--symbol", "diag(z,3+z)"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let c = indexlab(&["suite", "--criteria", "1,5"]);
    let d = indexlab(&["suite", "--criteria", "1,5"]);
    assert_eq!(c.status.code(), Some(0));
    assert_eq!(c.stdout, d.stdout);
}

#[test]
fn config_file_matches_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    write(&cfg, r#"{"kind": "toeplitz", "symbols": ["z", "z^-2"]}"#);
    let from_file = indexlab(&["run", cfg.to_str().unwrap()]);
    let from_flags = indexlab(&["toeplitz", "--symbol", "z", "--symbol", "z^-2"]);
    assert_eq!(from_file.status.code(), Some(0));
    assert_eq!(from_file.stdout, from_flags.stdout);
}

#[test]
fn unknown_config_field_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    write(&cfg, r#"{"kind": "toeplitz", "symbols": ["z"], "tolerance": 1e-3}"#);
    assert_eq!(indexlab(&["run", cfg.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(indexlab(&["toeplitz", "--symbol", "nope"]).status.code(), Some(2));
    assert_eq!(indexlab(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn small_grid_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("grid.json");
    write(&grid, r#"{"L": 4.0, "n_t": 4, "n_theta": 8, "bc": "dirichlet", "cut_index": 2}"#);
    let out = indexlab(&["grid", "--symbol", "z", "--grid", grid.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}
