use std::path::Path;
use std::process::{Command, Output};

fn mlnetreg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mlnetreg"))
        .args(args)
        .env("MLNETREG_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(p: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn simulate_smoke() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let summary = dir.path().join("summary.csv");
    let run = mlnetreg(&[
        "simulate", "--experiment", "ccmnetr-noiseless", "--n-list", "100", "--reps", "20", "--seed", "7",
        "--out", path(&out), "--summary-csv", path(&summary),
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let report = json(&out);
    assert_eq!(report["cells"][0]["n_success"], 20);
    assert!(report.get("wall_time_seconds").is_none());
    let csv = std::fs::read_to_string(&summary).unwrap();
    assert!(csv.starts_with("n,a_n_rule,model,coefficient"));
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        let run = mlnetreg(&[
            "simulate", "--experiment", "cmnetr-noisy", "--n-list", "40,50", "--reps", "6", "--seed", "3",
            "--out", path(p),
        ]);
        assert!(run.status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(mlnetreg(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(mlnetreg(&["simulate"]).status.code(), Some(1));
    assert_eq!(mlnetreg(&["simulate", "--experiment", "ccmnetr-noiseless", "--reps", "0"]).status.code(), Some(1));
    assert_eq!(mlnetreg(&["--help"]).status.code(), Some(0));
}

#[test]
fn data_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.csv");
    let run = mlnetreg(&["centrality", "--network", path(&missing)]);
    assert_eq!(run.status.code(), Some(2));
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "node_i,layer_i,node_j,layer_j,weight\n1,1,2,1,abc\n").unwrap();
    assert_eq!(mlnetreg(&["centrality", "--network", path(&bad)]).status.code(), Some(2));
}

#[test]
fn numerical_errors_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let cov = dir.path().join("cov.csv");
    std::fs::write(&cov, "a,b\n1,2\n2,4\n3,6\n4,8.0\n").unwrap();
    let run = mlnetreg(&["vif", "--covariates", path(&cov)]);
    assert_eq!(run.status.code(), Some(3), "{}", String::from_utf8_lossy(&run.stderr));
}

#[test]
fn centrality_and_vif_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let net = dir.path().join("net.csv");
    // two layers of a 4-cycle with a chord, coupled node to node
    let mut text = String::from("node_i,layer_i,node_j,layer_j,weight\n");
    for l in 1..=2 {
        for (i, j) in [(1, 2), (2, 3), (3, 4), (4, 1), (1, 3)] {
            text.push_str(&format!("{i},{l},{j},{l},{}\n", l as f64));
        }
    }
    for i in 1..=4 {
        text.push_str(&format!("{i},1,{i},2,1\n"));
    }
    std::fs::write(&net, text).unwrap();
    let out = dir.path().join("c.json");
    let run = mlnetreg(&["centrality", "--network", path(&net), "--out", path(&out)]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let v = json(&out);
    assert!(v["gap"].as_f64().unwrap() > 0.0);

    let cov = dir.path().join("cov.csv");
    std::fs::write(&cov, "a,b,c\n1,0.5,3\n2,0.1,1\n3,0.9,4\n4,0.2,1\n5,0.7,5\n6,0.3,9\n").unwrap();
    let vout = dir.path().join("vif.json");
    assert!(mlnetreg(&["vif", "--covariates", path(&cov), "--out", path(&vout)]).status.success());
    assert!(json(&vout).to_string().contains("\"a\""));
}

#[test]
fn fixture_then_wiod() {
    let dir = tempfile::tempdir().unwrap();
    let run = mlnetreg(&["fixture", "--out-dir", path(dir.path()), "--seed", "0"]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let out = dir.path().join("wiod.json");
    let run = mlnetreg(&[
        "wiod",
        "--flows", path(&dir.path().join("flows.csv")),
        "--flows-format", "edge-list",
        "--layers", "43",
        "--covariates", path(&dir.path().join("covariates.csv")),
        "--communities", path(&dir.path().join("communities.csv")),
        "--out", path(&out),
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let report = json(&out);
    let mut dropped: Vec<&str> = report["vif_dropped"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    dropped.sort();
    assert_eq!(dropped, ["CAP", "COMP"]);
    assert!(report["f_test"]["f_stat"].as_f64().unwrap() > 0.0);
}
