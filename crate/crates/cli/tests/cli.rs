use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn cpcp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cpcp"))
        .args(args)
        .env_remove("CPCP_THREADS")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// A generated 30×30 instance in `<tmp>/problem`.
fn generated() -> (TempDir, PathBuf) {
    let tmp = tempfile::tempdir().unwrap();
    let spec = write(
        tmp.path(),
        "spec.json",
        r#"{"m":30,"n":30,"r":2,"sparse_fraction":0.02,"sparse_amplitude":10.0,"noise_std":0.1,"rho":0.9,"seed":4}"#,
    );
    let problem = tmp.path().join("problem");
    let out = cpcp(&["generate", "--spec", arg(&spec), "--out", arg(&problem)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    (tmp, problem)
}

#[test]
fn generate_writes_the_problem_files() {
    let (_tmp, problem) = generated();
    for f in ["observed.mtx", "L0.mtx", "S0.mtx", "instance.json"] {
        assert!(problem.join(f).is_file(), "{f}");
    }
}

#[test]
fn fwt_solve_reports_summary_trace_and_solution() {
    let (tmp, problem) = generated();
    let config = write(tmp.path(), "fwt.json", r#"{"lambda_L":1.0,"lambda_S":0.2,"max_iter":400}"#);
    let trace = tmp.path().join("trace.csv");
    let out_dir = tmp.path().join("solution");
    let out = cpcp(&[
        "solve", "--algo", "fwt", "--problem", arg(&problem), "--config", arg(&config),
        "--trace", arg(&trace), "--out", arg(&out_dir),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["algo"], "fwt");
    assert_eq!(summary["converged"], true);
    assert!(summary["rel_error_l"].as_f64().unwrap() < 1.0);
    let text = fs::read_to_string(&trace).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "k,objective,dual_gap,step_a,step_b,rank,nnz,wall_nanos,U_L,U_S"
    );
    for f in ["L.mtx", "S.mtx", "summary.json"] {
        assert!(out_dir.join(f).is_file(), "{f}");
    }
}

#[test]
fn exhausted_budget_with_a_stopping_rule_exits_three() {
    let (tmp, problem) = generated();
    let config = write(tmp.path(), "fw.json", r#"{"tau_L":50.0,"tau_S":50.0,"max_iter":3,"gap_tol":1e-12}"#);
    let out = cpcp(&["solve", "--algo", "fw", "--problem", arg(&problem), "--config", arg(&config)]);
    assert_eq!(out.status.code(), Some(3));
    let config = write(tmp.path(), "fw_fixed.json", r#"{"tau_L":50.0,"tau_S":50.0,"max_iter":3}"#);
    let out = cpcp(&["solve", "--algo", "fw", "--problem", arg(&problem), "--config", arg(&config)]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn jsonl_trace_is_chosen_by_extension() {
    let (tmp, problem) = generated();
    let config = write(tmp.path(), "ista.json", r#"{"lambda_L":1.0,"lambda_S":0.2,"max_iter":5}"#);
    let trace = tmp.path().join("trace.jsonl");
    let out = cpcp(&[
        "solve", "--algo", "ista", "--problem", arg(&problem), "--config", arg(&config), "--trace", arg(&trace),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&trace).unwrap();
    let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert_eq!(first["k"], 0);
}

#[test]
fn invalid_input_exits_two() {
    let (tmp, problem) = generated();
    let unknown = write(tmp.path(), "bad.json", r#"{"lambda_L":1.0,"lambda_S":0.2,"speed":9}"#);
    let out = cpcp(&["solve", "--algo", "fwt", "--problem", arg(&problem), "--config", arg(&unknown)]);
    assert_eq!(out.status.code(), Some(2));

    let good = write(tmp.path(), "good.json", r#"{"lambda_L":1.0,"lambda_S":0.2}"#);
    let missing = tmp.path().join("nowhere");
    let out = cpcp(&["solve", "--algo", "fwt", "--problem", arg(&missing), "--config", arg(&good)]);
    assert_eq!(out.status.code(), Some(2));

    let out = Command::new(env!("CARGO_BIN_EXE_cpcp"))
        .args(["solve", "--algo", "fwt", "--problem", arg(&problem), "--config", arg(&good)])
        .env("CPCP_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bench_writes_csv_and_rejects_descending_sweeps() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = tmp.path().join("bench.csv");
    let out = cpcp(&[
        "bench", "--algo", "fwt", "--sweep", "40x20,40x40", "--iterations", "2", "--reps", "1", "--out", arg(&csv),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "solver,m,n,rho,median_iter_nanos");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("fwt,40,20,1"));

    let out = cpcp(&["bench", "--algo", "fwt", "--sweep", "40x40,20x20"]);
    assert_eq!(out.status.code(), Some(2));
}
