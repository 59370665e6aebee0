use std::collections::BTreeSet;
use std::process::{Command, Output};

fn parcollect(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_parcollect"))
        .args(args)
        .env_remove("PARCOLLECT_STATE_LIMIT")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn keys(v: &serde_json::Value) -> BTreeSet<String> {
    v.as_object().unwrap().keys().cloned().collect()
}

fn set(names: &[&str]) -> BTreeSet<String> {
    names.iter().map(|s| s.to_string()).collect()
}

#[test]
fn exact_json_report() {
    let out = parcollect(&["exact", "--collections", "6,6,6", "--output", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(
        keys(&json),
        set(&["command", "spec", "mode", "results", "diagnostics", "version"])
    );
    assert_eq!(keys(&json["results"]), set(&["expectation", "variance"]));
    assert_eq!(keys(&json["diagnostics"]), set(&["states", "edges", "wall_ms"]));
    assert_eq!(json["command"], "exact");
    assert_eq!(json["spec"], serde_json::json!([6, 6, 6]));
    assert_eq!(json["mode"], "float");
    assert_eq!(json["version"], 1);
    assert_eq!(json["diagnostics"]["states"], 217);
    let e = json["results"]["expectation"].as_f64().unwrap();
    let v = json["results"]["variance"].as_f64().unwrap();
    assert!((e - 20.01).abs() < 0.005);
    assert!((v - 44.8975).abs() < 0.005);
}

#[test]
fn exact_rational_full_vectors() {
    let out = parcollect(&[
        "exact",
        "--collections",
        "2,2",
        "--mode",
        "rational",
        "--full",
        "--output",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(json["results"]["expectation"], "11/3");
    assert_eq!(json["results"]["variance"], "8/3");
    let rows = json["results"]["per_state"].as_array().unwrap();
    assert_eq!(rows.len(), 5);
    assert_eq!(rows[0]["state"], serde_json::json!([0, 0]));
    assert_eq!(rows[1]["k"], "8/3");
    assert_eq!(rows[4]["state"], serde_json::json!([2, 2]));
    assert_eq!(rows[4]["k"], "0/1");
}

#[test]
fn closed_form_rational() {
    let out = parcollect(&["closed-form", "--n", "6", "--m", "1", "--mode", "rational", "--output", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(json["results"]["expectation"], "147/10");
    assert_eq!(json["results"]["variance"], "3899/100");
    assert_eq!(json["results"]["variance_markov"], "3899/100");
    assert_eq!(json["diagnostics"]["states"], serde_json::Value::Null);
}

#[test]
fn check_two_by_two_passes() {
    let out = parcollect(&["check", "--collections", "2,2", "--trials", "100000", "--seed", "42"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let text = stdout(&out);
    assert!(text.contains("check: PASS"));
    for method in ["exact", "tailsum", "simulate"] {
        assert!(text.contains(method), "{text}");
    }

    let out = parcollect(&[
        "check", "--collections", "2,2", "--trials", "100000", "--seed", "42", "--mode", "rational",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("11/3"));
}

#[test]
fn check_json_lists_methods_and_comparisons() {
    let out = parcollect(&["check", "--n", "5", "--trials", "20000", "--output", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let methods: Vec<&str> = json["methods"]
        .as_array()
        .unwrap()
        .iter()
        .map(|m| m["method"].as_str().unwrap())
        .collect();
    assert_eq!(methods, vec!["closed-form", "exact", "tailsum", "simulate"]);
    let checks = json["checks"].as_array().unwrap();
    assert!(checks.iter().all(|c| c["ok"] == true));
    assert!(json["diagnostics"]["stderr"].as_f64().unwrap() > 0.0);
}

#[test]
fn tailsum_and_simulate_reports() {
    let out = parcollect(&["tailsum", "--collections", "6,6,6", "--output", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(json["diagnostics"]["truncation_bound"].as_f64().unwrap() < 1e-10);
    assert!((json["results"]["expectation"].as_f64().unwrap() - 20.0100136508915).abs() < 1e-9);

    let a = parcollect(&["simulate", "--collections", "6,6,6", "--seed", "3", "--output", "json"]);
    let b = parcollect(&["simulate", "--collections", "6,6,6", "--seed", "3", "--output", "json"]);
    let ja: serde_json::Value = serde_json::from_str(&stdout(&a)).unwrap();
    let jb: serde_json::Value = serde_json::from_str(&stdout(&b)).unwrap();
    assert_eq!(ja["results"], jb["results"]);
    assert!(ja["diagnostics"]["stderr"].as_f64().unwrap() > 0.0);
}

#[test]
fn csv_output() {
    let out = parcollect(&["exact", "--n", "6", "--mode", "rational", "--output", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], "command,spec,mode,expectation,variance,states,edges,wall_ms");
    assert!(lines[1].starts_with("exact,6,rational,147/10,3899/100,7,"), "{}", lines[1]);
}

#[test]
fn exit_codes() {
    assert_eq!(parcollect(&["exact"]).status.code(), Some(1));
    assert_eq!(parcollect(&["exact", "--collections", "0"]).status.code(), Some(1));
    assert_eq!(parcollect(&["closed-form", "--collections", "3,4"]).status.code(), Some(1));
    assert_eq!(parcollect(&["nope", "--n", "3"]).status.code(), Some(1));
    assert_eq!(parcollect(&["exact", "--n", "3", "--mode", "double"]).status.code(), Some(1));
    assert_eq!(parcollect(&["--help"]).status.code(), Some(0));

    let capped = Command::new(env!("CARGO_BIN_EXE_parcollect"))
        .args(["exact", "--collections", "4,4"])
        .env("PARCOLLECT_STATE_LIMIT", "10")
        .output()
        .unwrap();
    assert_eq!(capped.status.code(), Some(2));

    let default_cap = parcollect(&["exact", "--collections", "10000,10000"]);
    assert_eq!(default_cap.status.code(), Some(2));
}
