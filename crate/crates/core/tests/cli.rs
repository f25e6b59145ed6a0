mod common;

use std::process::{Command, Output};

use common::fixture_path;
use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_finsler-lab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn fx(name: &str) -> String {
    fixture_path(name).display().to_string()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

#[test]
fn randers_is_not_r_quadratic() {
    let out = run(&["check", "--metric", &fx("randers_paper.fm"), "--class", "r-quadratic", "--samples", "20", "--seed", "7"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn thm1_on_flat_space() {
    let out = run(&["verify", "--suite", "thm1", "--metric", &fx("euclidean.fm"), "--rho", "custom y[1]"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn compare_reports_relation_and_factors() {
    let out = run(&[
        "compare", "--metric", &fx("euclidean.fm"), "--metric2", &fx("randers_paper.fm"), "--samples", "6", "--format", "json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["related"], Value::Bool(true));
    assert_eq!(v["P"].as_array().unwrap().len(), 6);
    assert!(v["P"][0].as_f64().unwrap().abs() > 0.0);
}

#[test]
fn json_schema_keys() {
    let out = run(&["check", "--metric", &fx("riemannian_sphere.fm"), "--class", "douglas", "--samples", "3", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    for key in ["command", "metric", "jet_order", "seed", "samples", "checks", "runtime_seconds"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["command"], "check");
    assert_eq!(v["jet_order"], 6);
    assert!(v["metric"].is_array());
    let check = &v["checks"][0];
    for key in ["name", "tolerance", "max_residual", "verdict", "witness"] {
        assert!(check.get(key).is_some(), "missing checks[].{key}");
    }
    for key in ["x", "y", "slot"] {
        assert!(check["witness"].get(key).is_some());
    }
}

#[test]
fn text_and_json_carry_the_same_residuals() {
    let args = ["check", "--metric", &fx("randers_paper.fm"), "--class", "all", "--samples", "4"];
    let text = String::from_utf8(run(&args).stdout).unwrap();
    let v = json(&run(&[&args[..], &["--format", "json"]].concat()));
    for c in v["checks"].as_array().unwrap() {
        let line = text
            .lines()
            .find(|l| l.split_whitespace().next() == Some(c["name"].as_str().unwrap()))
            .unwrap();
        let shown: f64 = line.split_whitespace().nth(3).unwrap().parse().unwrap();
        assert_eq!(shown, c["max_residual"].as_f64().unwrap(), "{line}");
    }
}

#[test]
fn repeated_runs_are_identical() {
    let args = ["verify", "--suite", "all", "--metric", &fx("randers_paper.fm"), "--samples", "3", "--format", "json", "--no-timing"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.stdout, b.stdout);
    let c = Command::new(env!("CARGO_BIN_EXE_finsler-lab"))
        .args(args)
        .env("FINSLER_LAB_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(a.stdout, c.stdout);
}

#[test]
fn usage_errors_exit_with_three() {
    let missing = run(&["check", "--metric", "no-such-file.fm", "--class", "douglas"]);
    assert_eq!(missing.status.code(), Some(3));

    let low = run(&["check", "--metric", &fx("euclidean.fm"), "--class", "gpr-quadratic", "--order", "5"]);
    assert_eq!(low.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&low.stderr).contains("K >= 7"));

    let unknown = run(&["check", "--metric", &fx("euclidean.fm"), "--class", "conformal"]);
    assert_eq!(unknown.status.code(), Some(3));

    let bad_flag = run(&["check", "--frobnicate"]);
    assert_eq!(bad_flag.status.code(), Some(3));

    let eval = run(&["eval", "--metric", &fx("euclidean.fm"), "--x", "0,0", "--y", "1,0", "--tensor", "Rfull"]);
    assert_eq!(eval.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&eval.stderr).contains("K >= 6"));
}

#[test]
fn eval_prints_components() {
    let out = run(&[
        "eval", "--metric", &fx("euclidean.fm"), "--x", "0.1,-0.3", "--y", "1,0", "--tensor", "g,G", "--format", "json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["tensors"][0]["name"], "g");
    let g: Vec<f64> = v["tensors"][0]["values"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert_eq!(g, vec![1.0, 0.0, 0.0, 1.0]);
    assert!(v["tensors"][1]["values"].as_array().unwrap().iter().all(|x| x.as_f64() == Some(0.0)));
}

#[test]
fn report_can_be_written_to_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let out = run(&[
        "check", "--metric", &fx("euclidean.fm"), "--class", "berwald", "--samples", "2", "--format", "json",
        "--output", path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(v["checks"][0]["verdict"], "pass");
}
