//! End-to-end tests against the built binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_omega-census")
}

fn repo_specs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../specs")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "command {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn census_mass_invariant() {
    let spec = repo_specs().join("mod4.json");
    let csv = stdout(&["census", "--x", "1000", "--spec", spec.to_str().unwrap()]);
    let total: u64 = csv
        .lines()
        .skip(2)
        .map(|l| l.rsplit(',').next().unwrap().parse::<u64>().unwrap())
        .sum();
    assert_eq!(total, 1000);
    assert!(csv.starts_with("# x=1000 spec="));
}

#[test]
fn census_scientific_notation_and_json() {
    let spec = repo_specs().join("all.json");
    let json = stdout(&[
        "census",
        "--x",
        "1e3",
        "--spec",
        spec.to_str().unwrap(),
        "--format",
        "json",
    ]);
    let value: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(value["x"], 1000);
}

#[test]
fn runs_are_deterministic() {
    let spec = repo_specs().join("mod4.json");
    let args = [
        "compare",
        "--x",
        "1e4",
        "--spec",
        spec.to_str().unwrap(),
        "--predictors",
        "poisson,goaltm",
        "--k-mode",
        "top-probability",
        "--top",
        "4",
        "--p0",
        "100000",
    ];
    let first = stdout(&args);
    let second = stdout(&args);
    assert_eq!(first, second);
    assert!(first.starts_with("x,predictor,k_0,k_1,predicted,exact,ratio,error_estimate"));
    // exact column populated on every row: a census ran at this x
    for line in first.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        assert!(!fields[5].is_empty(), "row missing exact: {line}");
        assert!(!fields[6].is_empty(), "row missing ratio: {line}");
    }
}

#[test]
fn thread_env_var_does_not_change_output() {
    let spec = repo_specs().join("mod4.json");
    let args = ["census", "--x", "200000", "--spec", spec.to_str().unwrap()];
    let plain = stdout(&args);
    let out = Command::new(bin())
        .args(args)
        .env("OMEGA_CENSUS_THREADS", "2")
        .output()
        .expect("binary runs");
    assert!(out.status.success());
    assert_eq!(plain, String::from_utf8(out.stdout).unwrap());
}

#[test]
fn predict_has_no_exact_column_values() {
    let spec = repo_specs().join("mod4.json");
    let csv = stdout(&[
        "predict",
        "--x",
        "1e4",
        "--spec",
        spec.to_str().unwrap(),
        "--k",
        "1,1;2,1",
        "--predictors",
        "poisson",
    ]);
    for line in csv.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        assert!(fields[5].is_empty(), "predict fabricated exact: {line}");
    }
}

#[test]
fn invert_reports_tiny_errors() {
    let spec = repo_specs().join("mod4.json");
    let json = stdout(&[
        "invert",
        "--x",
        "1e4",
        "--spec",
        spec.to_str().unwrap(),
        "--grid",
        "16,16",
        "--radii",
        "0.5,1,2",
    ]);
    let value: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert!(value["max_abs_error"].as_f64().unwrap() < 1e-6);
    assert!(value["radius_spread"].as_f64().unwrap() < 1e-6);
}

#[test]
fn mertens_value_and_exit_codes() {
    let json = stdout(&["mertens", "--truncation", "1e6"]);
    let value: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert!((value["value"].as_f64().unwrap() - 0.26150).abs() < 5e-4);

    // domain error (truncation too small) exits 1
    let out = run(&["mertens", "--truncation", "1000"]);
    assert_eq!(out.status.code(), Some(1));

    // budget error exits 2
    let spec = repo_specs().join("all.json");
    let out = run(&[
        "census",
        "--x",
        "100000",
        "--spec",
        spec.to_str().unwrap(),
        "--budget",
        "1000",
    ]);
    assert_eq!(out.status.code(), Some(2));

    // malformed argv: clap usage error
    let out = run(&["census", "--x"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn halasz_summary_fields() {
    let spec = repo_specs().join("mod4.json");
    let json = stdout(&[
        "halasz",
        "--x",
        "1e4",
        "--spec",
        spec.to_str().unwrap(),
        "--z",
        "-1,0;-1,0",
        "--tau-max",
        "2",
    ]);
    let value: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert!(value["profile"]["delta"].as_array().unwrap().len() == 2);
    assert!(value["mean_value_ratio"]["norm"].as_f64().unwrap() <= 1.0);
    assert!(value["bound_rhs"]["good"].as_f64().unwrap() > 0.0);
}

#[test]
fn simul_rho_matches_worked_example() {
    let json = stdout(&["simul-rho", "--esums", "10,5", "--rho0", "0.5"]);
    let value: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(value["rho"].as_f64().unwrap(), 0.4);
}

#[test]
fn validate_counts_parts() {
    let spec = repo_specs().join("mod3.json");
    let json = stdout(&[
        "validate",
        "--spec",
        spec.to_str().unwrap(),
        "--bound",
        "100",
    ]);
    let value: serde_json::Value = serde_json::from_str(&json).unwrap();
    let counts: Vec<u64> = value["per_part_counts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_u64().unwrap())
        .collect();
    assert_eq!(counts.iter().sum::<u64>(), 25);
}

#[test]
fn euler_scalar_at_two() {
    let json = stdout(&["euler", "--rho", "2", "--p0", "1e5"]);
    let value: serde_json::Value = serde_json::from_str(&json).unwrap();
    let expected = 6.0 / (std::f64::consts::PI * std::f64::consts::PI);
    assert!((value["value"].as_f64().unwrap() - expected).abs() < 1e-4);
}

#[test]
fn euler_vector_all_ones() {
    let spec = repo_specs().join("mod4.json");
    let json = stdout(&[
        "euler",
        "--rho-vec",
        "1,1",
        "--spec",
        spec.to_str().unwrap(),
        "--p0",
        "1e5",
    ]);
    let value: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(value["value"].as_f64().unwrap(), 1.0);
    assert!(value["tail_bound"].as_f64().unwrap() > 0.0);
}

#[test]
fn predict_goaltm_auto_rho() {
    let spec = repo_specs().join("mod4.json");
    let csv = stdout(&[
        "predict",
        "--x",
        "1e4",
        "--spec",
        spec.to_str().unwrap(),
        "--k",
        "1,1",
        "--predictors",
        "poisson,goaltm",
        "--p0",
        "1e5",
    ]);
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    // goaltm rows carry an error estimate, poisson rows do not
    let goaltm = rows.iter().find(|r| r.contains("goaltm")).unwrap();
    assert!(!goaltm.rsplit(',').next().unwrap().is_empty());
    let poisson = rows.iter().find(|r| r.contains("poisson")).unwrap();
    assert!(poisson.ends_with(','));
}

#[test]
fn compare_rejects_out_of_support_k() {
    let spec = repo_specs().join("mod4.json");
    let out = run(&[
        "compare",
        "--x",
        "1000",
        "--spec",
        spec.to_str().unwrap(),
        "--k-mode",
        "explicit",
        "--k",
        "60,0",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn report_csv_json_round_trip() {
    let spec = repo_specs().join("mod4.json");
    let base = [
        "compare",
        "--x",
        "1e3",
        "--spec",
        spec.to_str().unwrap(),
        "--predictors",
        "poisson,halapp",
        "--k-mode",
        "top-probability",
        "--top",
        "3",
    ];
    let csv = stdout(&base);
    let mut json_args = base.to_vec();
    json_args.extend_from_slice(&["--format", "json"]);
    let json = stdout(&json_args);
    let reports = omega_core::report::reports_from_json(&json).unwrap();
    let csv_again = omega_core::report::reports_to_csv(&reports).unwrap();
    assert_eq!(csv, csv_again);
}
