use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn gigwalk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gigwalk"))
        .args(args)
        .env_remove("GIGWALK_SEED")
        .output()
        .expect("binary runs")
}

fn read_json(path: &Path) -> Vec<Value> {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn simulate_writes_path_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("path.csv");
    let run = gigwalk(&[
        "simulate",
        "--lambda",
        "1",
        "--a",
        "1",
        "--delta",
        "1",
        "--steps",
        "100",
        "--seed",
        "7",
        "--format",
        "csv",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(run.status.code(), Some(0));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# schema_version: 1"));
    assert_eq!(lines.next(), Some("k,gamma,x,z,n_na,n_an"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 100);
    assert_eq!(rows[0][0], 1.0);
    assert_eq!(rows[0][3], 1.0);
    for r in &rows {
        let (x, z) = (r[2], r[3]);
        assert!((r[4] - z / x).abs() <= 1e-12 * r[4]);
        assert!((r[5] - z * x).abs() <= 1e-12 * r[5]);
    }
}

#[test]
fn reports_are_reproducible_across_runs_and_workers() {
    let dir = tempfile::tempdir().unwrap();
    let args = |name: &str, workers: &str| {
        vec![
            "dufresne".to_string(),
            "--lambda=1".into(),
            "--a=1".into(),
            "--samples=5000".into(),
            "--seed=3".into(),
            format!("--workers={workers}"),
            format!("--out={}", dir.path().join(name).display()),
        ]
    };
    for (name, workers) in [("a.json", "1"), ("b.json", "1"), ("c.json", "3")] {
        let a: Vec<String> = args(name, workers);
        let run = gigwalk(&a.iter().map(String::as_str).collect::<Vec<_>>());
        assert!(run.status.code().is_some_and(|c| c < 2), "{run:?}");
    }
    let a = std::fs::read(dir.path().join("a.json")).unwrap();
    assert_eq!(a, std::fs::read(dir.path().join("b.json")).unwrap());
    assert_eq!(a, std::fs::read(dir.path().join("c.json")).unwrap());
    let records = read_json(&dir.path().join("a.json"));
    assert_eq!(records[0]["schema_version"], 1);
    assert_eq!(records[0]["runtime_ms"], Value::Null);
}

#[test]
fn seed_falls_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let flag = dir.path().join("flag.json");
    let env = dir.path().join("env.json");
    let base = ["simulate", "--lambda", "0.5", "--a", "2", "--steps", "5"];
    let mut with_flag = base.to_vec();
    let flag_out = flag.to_str().unwrap();
    with_flag.extend(["--seed", "11", "--out", flag_out]);
    assert_eq!(gigwalk(&with_flag).status.code(), Some(0));
    let mut with_env = base.to_vec();
    let env_out = env.to_str().unwrap();
    with_env.extend(["--out", env_out]);
    let run = Command::new(env!("CARGO_BIN_EXE_gigwalk"))
        .args(&with_env)
        .env("GIGWALK_SEED", "11")
        .output()
        .unwrap();
    assert_eq!(run.status.code(), Some(0));
    assert_eq!(std::fs::read(&flag).unwrap(), std::fs::read(&env).unwrap());
}

#[test]
fn moments_table_has_ratios_near_one() {
    let run = gigwalk(&["moments", "--lambda", "2", "--a", "30"]);
    assert_eq!(run.status.code(), Some(0));
    let records: Vec<Value> = serde_json::from_slice(&run.stdout).unwrap();
    assert_eq!(records.len(), 4);
    for (i, r) in records.iter().enumerate() {
        assert_eq!(r["m"], i as u64 + 1);
        assert!((r["ratio"].as_f64().unwrap() - 1.0).abs() < 0.02);
        assert_eq!(r["pass"], true);
    }
}

#[test]
fn failing_check_exits_one_and_still_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c.json");
    let run = gigwalk(&[
        "characterize",
        "--lambda",
        "1",
        "--a",
        "1",
        "--tol",
        "1e-30",
        "--timing",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(run.status.code(), Some(1));
    let records = read_json(&out);
    assert_eq!(records.len(), 9);
    assert!(records.iter().any(|r| r["pass"] == false));
    assert!(records.iter().all(|r| r["runtime_ms"].is_u64()));
}

#[test]
fn usage_and_domain_errors_exit_two() {
    for args in [
        vec!["simulate", "--a", "1"],
        vec!["simulate", "--lambda", "1", "--a", "-1"],
        vec!["dufresne", "--lambda", "0", "--a", "1"],
        vec!["moments", "--lambda", "1", "--a", "1", "--format", "xml"],
        vec!["nonsense"],
    ] {
        let run = gigwalk(&args);
        assert_eq!(run.status.code(), Some(2), "{args:?}");
        assert!(!run.stderr.is_empty());
    }
}

#[test]
fn verify_suite_passes() {
    let run = gigwalk(&["verify", "--lambda", "1", "--a", "1", "--seed", "42", "--format", "csv"]);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stdout));
    let text = String::from_utf8(run.stdout).unwrap();
    for test in [
        "intertwining",
        "detailed_balance",
        "stationarity",
        "dufresne",
        "reconstruction_finite",
    ] {
        assert!(text.lines().any(|l| l.starts_with(test)), "{test} missing");
    }
}

#[test]
fn reconstruct_and_converge_run() {
    let run = gigwalk(&["reconstruct", "--lambda", "-0.5", "--a", "2", "--samples", "50"]);
    assert_eq!(run.status.code(), Some(0));
    let records: Vec<Value> = serde_json::from_slice(&run.stdout).unwrap();
    assert_eq!(records.len(), 2);
    let run = gigwalk(&[
        "converge",
        "--lambda",
        "1",
        "--a",
        "1",
        "--steps",
        "30",
        "--samples",
        "2000",
    ]);
    let records: Vec<Value> = serde_json::from_slice(&run.stdout).unwrap();
    let ns: Vec<f64> = records.iter().map(|r| r["params"]["n"].as_f64().unwrap()).collect();
    assert_eq!(ns, vec![10.0, 30.0]);
}
