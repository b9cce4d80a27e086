//! End-to-end tests of the `kwkl` binary.

use std::f64::consts::LN_2;
use std::path::Path;
use std::process::{Command, Output};

const FIXTURE: &str = r#"{"q": [1, 1], "p": [3, 1], "cost": [[0, 1], [1, 0]]}"#;

fn kwkl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kwkl")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn otp_prints_value_plan_and_potentials() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "fixture.json", FIXTURE);
    let out = kwkl(&["otp", "--input", &path]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("K_c = 0.25"), "{text}");
    assert!(text.contains("f = [") && text.contains("g = ["), "{text}");
}

#[test]
fn malformed_file_exits_2_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "bad.json", "{\n  \"q\": [1, 1],\n  \"p\": [1 1]\n}\n");
    let out = kwkl(&["otp", "--input", &path]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains(&format!("{path}:3:")), "{}", stderr(&out));
}

#[test]
fn invalid_weights_and_missing_file_exit_2() {
    let negative = r#"{"q": [1, -1], "p": [1, 1], "cost": [[0, 1], [1, 0]]}"#;
    assert_eq!(kwkl(&["otp", "--input", negative]).status.code(), Some(2));
    assert_eq!(kwkl(&["otp", "--input", "/nonexistent/instance.json"]).status.code(), Some(2));
    assert_eq!(kwkl(&["ocp", "--input", FIXTURE]).status.code(), Some(2));
}

#[test]
fn ocp_cotp_and_dual() {
    let ocp = stdout(&kwkl(&["ocp", "--input", FIXTURE, "--lambda", "0.2"]));
    assert!(ocp.contains("R_c = ") && ocp.contains("beta = ") && ocp.contains("I = "), "{ocp}");
    let cotp = stdout(&kwkl(&["cotp", "--input", FIXTURE, "--lambda", "0.05"]));
    assert!(cotp.contains("active = true"), "{cotp}");
    let dual = stdout(&kwkl(&["dual", "--input", FIXTURE]));
    assert!(dual.contains("J_c = ") && dual.contains("gap = "), "{dual}");
}

#[test]
fn bits_rescale_information() {
    let nats = stdout(&kwkl(&["ocp", "--input", FIXTURE, "--lambda", "0.2"]));
    let bits = stdout(&kwkl(&["ocp", "--input", FIXTURE, "--lambda", &(0.2 / LN_2).to_string(), "--bits"]));
    let info = |s: &str| -> f64 {
        let line = s.lines().find(|l| l.starts_with("I = ")).unwrap();
        line.split_whitespace().nth(2).unwrap().parse().unwrap()
    };
    let value = |s: &str| s.lines().find(|l| l.starts_with("R_c")).unwrap().to_string();
    assert!((info(&bits) - info(&nats) / LN_2).abs() < 1e-9);
    assert_eq!(value(&nats), value(&bits));
}

#[test]
fn identities_pass_on_the_fixture() {
    let doc = r#"{"q": [1, 2], "p": [3, 1], "cost": [[0, 1], [1, 0]], "reference": [1, 1]}"#;
    let out = kwkl(&["identities", "--input", doc]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert_eq!(stdout(&out).matches("pass").count(), 4);
}

#[test]
fn sweep_writes_csv_file() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("sweep.csv");
    let grid = format!("0,{LN_2},8");
    let out = kwkl(&["sweep", "--input", FIXTURE, "--grid", &grid, "--out", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&csv).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "lambda,r_c,k_c_lambda,j_c,v_lambda,beta,info_achieved,active");
    assert_eq!(rows.len(), 9);
    let r_c: Vec<f64> = rows[1..].iter().map(|r| r.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(r_c.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn verify_passes_and_reports_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("verify.csv");
    let out = kwkl(&["verify", "--seed", "7", "--count", "100", "--out", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("checks passed over 100 instances"));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("seed,check,value,tolerance,pass\n"));
    assert!(!text.contains(",false"));
}

#[test]
fn verify_failures_name_check_and_seed() {
    // A tolerance no solver can meet forces failures.
    let out = kwkl(&["verify", "--seed", "3", "--count", "2", "--tol", "theorem2=1e-300"]);
    assert_eq!(out.status.code(), Some(1));
    let summary = stderr(&out);
    assert!(summary.contains("FAILED theorem2 on seed 3") || summary.contains("FAILED theorem2 on seed 4"), "{summary}");
}
