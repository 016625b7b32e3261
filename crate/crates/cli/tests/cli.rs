use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const GAUSS: &str = r#"{"L": 2, "N": 1, "alpha": [1], "beta": [1], "gamma": [2]}"#;
const GAUSS_GENERIC: &str = r#"{"L": 2, "N": 1, "alpha": [0.25], "beta": [-0.1], "gamma": [0.3]}"#;
const RATIONAL: &str = r#"{"L": 3, "N": 2,
  "alpha": [{"num": 1, "den": 3}, {"num": 2, "den": 5}],
  "beta": [{"num": -1, "den": 7}, {"num": 3, "den": 11}],
  "gamma": [{"num": 1, "den": 2}, {"num": 5, "den": 4}]}"#;

fn fln(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fln")).args(args).output().expect("binary runs")
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json_out(o: &Output) -> Value {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).expect("json on stdout")
}

#[test]
fn eval_log_identity() {
    // 2F1(1,1;2;x) = -log(1-x)/x
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "p.json", GAUSS);
    let v = json_out(&fln(&["eval", "--params", s(&p), "--x", "0.5"]));
    let re = v["re"].as_f64().unwrap();
    assert!((re - 4.0f64.ln()).abs() < 1e-12, "{re}");
    assert_eq!(v["im"].as_f64().unwrap(), 0.0);
}

#[test]
fn check_flat_is_exact_for_rational_input() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "p.json", RATIONAL);
    let v = json_out(&fln(&["check-flat", "--params", s(&p), "--x", "0.3;-0.45"]));
    assert_eq!(v["residual"], "exact-zero");
    let v = json_out(&fln(&["check-flat", "--params", s(&p), "--seed", "7"]));
    assert_eq!(v["residual"], "exact-zero");
    assert_eq!(v["points"], 10);
}

#[test]
fn check_flat_float_path() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "p.json", GAUSS_GENERIC);
    let v = json_out(&fln(&["check-flat", "--params", s(&p), "--chamber", "complex"]));
    assert!(v["residual"].as_f64().unwrap() <= 1e-12);
}

#[test]
fn exponents_match_scheme() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "p.json", RATIONAL);
    let v = json_out(&fln(&["exponents", "--params", s(&p)]));
    let scheme = v["scheme"].as_array().unwrap();
    // 0, 1, infinity for each coordinate plus one diagonal
    assert_eq!(scheme.len(), 7);
    assert!(scheme.iter().all(|r| r["match"] == true && r["arithmetic"] == "exact"));
}

#[test]
fn build_writes_matrices_to_file() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "p.json", RATIONAL);
    let out = dir.path().join("sys.json");
    let o = fln(&["build", "--params", s(&p), "--x", "0.2;0.1", "--out", s(&out)]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["rank"], 5);
    assert_eq!(v["E"].as_array().unwrap().len(), 2);
    assert_eq!(v["connection"].as_array().unwrap().len(), 2);
    assert!(v["G"]["1,2"].is_array());
    assert!(v["exact"]["F"][0][0][0]["den"].is_string());
}

#[test]
fn continuation_and_monodromy() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "p.json", GAUSS_GENERIC);
    let path = write(&dir, "path.json", "[[[0.2, 0]], [[0.5, 0.3]], [[0.9, 0.1]]]");
    let v = json_out(&fln(&["continue", "--params", s(&p), "--path", s(&path)]));
    assert_eq!(v["y_end"].as_array().unwrap().len(), 2);
    assert!(v["accepted_steps"].as_u64().unwrap() > 0);

    let v = json_out(&fln(&["monodromy", "--params", s(&p), "--x", "0.4"]));
    let loops = v["loops"].as_array().unwrap();
    assert_eq!(loops.len(), 3);
    assert!(loops.iter().all(|l| l["deviation"].as_f64().unwrap() < 1e-6));
}

#[test]
fn fundamental_with_factorization_table() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "p.json", GAUSS_GENERIC);
    let csv = dir.path().join("f.csv");
    let v = json_out(&fln(&["fundamental", "--params", s(&p), "--x", "0.4", "--nodes", "32", "--csv", s(&csv)]));
    assert!(v["scaled_determinant"].as_f64().unwrap() > 1e-10);
    let table = fs::read_to_string(&csv).unwrap();
    assert!(table.starts_with("kind,column,row,slope,reference"));
    assert!(table.lines().count() >= 3);
}

#[test]
fn isomonodromy_checks_emit_csv() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "p.json", RATIONAL);
    let o = fln(&["isomono-check", "--params", s(&p), "--x", "0.3;-0.2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("i,step,residual,order"));

    let o = fln(&["ham-check", "--params", s(&p), "--grid", "0.3;-0.2|0.1,0.1;0.2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 3);
}

#[test]
fn config_file_and_overrides() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "p.json", GAUSS);
    let cfg = write(&dir, "cfg.json", &format!(r#"{{"params": "{}", "x": "0.5"}}"#, s(&p)));
    let a = json_out(&fln(&["eval", "--config", s(&cfg)]));
    assert!((a["re"].as_f64().unwrap() - 4.0f64.ln()).abs() < 1e-12);
    let b = json_out(&fln(&["eval", "--config", s(&cfg), "--x", "0.25"]));
    assert!((b["re"].as_f64().unwrap() - 4.0 * (4.0f64 / 3.0).ln()).abs() < 1e-12);
}

#[test]
fn usage_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "p.json", GAUSS);
    let bad = write(&dir, "bad.json", r#"{"L": 2, "N": 1, "alpha": [1, 1], "beta": [1], "gamma": [2]}"#);
    for args in [
        vec!["eval", "--params", s(&p), "--x", "0.5", "--tol", "-1"],
        vec!["fundamental", "--params", s(&p), "--x", "0.5", "--nodes", "2"],
        vec!["eval", "--params", s(&bad), "--x", "0.5"],
        vec!["eval", "--params", s(&p), "--x", "abc"],
        vec!["eval", "--params", s(&p), "--x", "0.1;0.2"],
        vec!["monodromy", "--params", s(&p), "--x", "0.4", "--divisor", "x1=2"],
        vec!["eval", "--params", "/nonexistent.json", "--x", "0.5"],
        vec!["frobnicate"],
    ] {
        assert_eq!(fln(&args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn computational_failures_exit_1() {
    let dir = TempDir::new().unwrap();
    let p = write(&dir, "p.json", GAUSS);
    // outside the convergence polydisc
    assert_eq!(fln(&["eval", "--params", s(&p), "--x", "1.5"]).status.code(), Some(1));
}
