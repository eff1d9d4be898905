//! Golden reports and exit codes of the `matsumoto` binary.
//!
//! Set `UPDATE_GOLDEN=1` to rewrite the files under `tests/golden/`.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use matsumoto_cli::report::without_timing;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_matsumoto"))
}

fn manifest(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join(rel)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

/// Timing removed, and the host fields so goldens travel between machines.
fn masked(report: &str) -> String {
    let mut v = without_timing(report).expect("report is JSON");
    let env = v["environment"].as_object_mut().unwrap();
    env.remove("os");
    env.remove("arch");
    serde_json::to_string_pretty(&v).unwrap() + "\n"
}

fn check_golden(scenario: &str, expected_code: i32) {
    let path = manifest(&format!("scenarios/{scenario}.json"));
    let out = run(&["run", path.to_str().unwrap(), "--threads", "2"]);
    assert_eq!(
        out.status.code(),
        Some(expected_code),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let got = masked(&String::from_utf8(out.stdout).unwrap());
    let golden = manifest(&format!("tests/golden/{scenario}.report.json"));
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&golden, &got).unwrap();
    }
    let want = std::fs::read_to_string(&golden).expect("golden file present");
    assert!(
        got == want,
        "{scenario}: report differs from {}",
        golden.display()
    );
}

#[test]
fn flat_scenario_matches_golden() {
    check_golden("flat", 0);
}

#[test]
fn sphere_scenario_matches_golden() {
    check_golden("sphere", 0);
}

#[test]
fn product_scenario_matches_golden() {
    check_golden("parallel-product", 0);
}

#[test]
fn generic_scenario_fails_and_matches_golden() {
    check_golden("generic", 1);
}

#[test]
fn rerun_differs_only_in_timing() {
    let path = manifest("scenarios/parallel-product.json");
    let a = run(&["run", path.to_str().unwrap(), "--threads", "1"]);
    let b = run(&["run", path.to_str().unwrap(), "--threads", "3"]);
    let (a, b) = (
        String::from_utf8(a.stdout).unwrap(),
        String::from_utf8(b.stdout).unwrap(),
    );
    assert_eq!(masked(&a), masked(&b));
    let strip = |s: &str| s.split("\"timing\"").next().unwrap().to_string();
    assert_eq!(strip(&a), strip(&b));
}

#[test]
fn out_flag_writes_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("report.json");
    let path = manifest("scenarios/sphere.json");
    let out = run(&[
        "run",
        path.to_str().unwrap(),
        "--out",
        target.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(target).unwrap()).unwrap();
    assert_eq!(v["schema"], "v1");
    assert!(v["timing"]["generated_at"].is_string());
}

#[test]
fn gen_is_deterministic_and_loadable() {
    let a = run(&["gen", "--seed", "11", "--dim", "3", "--class", "conformal"]);
    let b = run(&["gen", "--seed", "11", "--dim", "3", "--class", "conformal"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("s.json");
    std::fs::write(&file, &a.stdout).unwrap();
    let config = matsumoto_cli::load_scenario(&file).unwrap();
    assert_eq!(config.dim, 3);
}

#[test]
fn usage_and_config_errors_exit_2() {
    assert_eq!(run(&[]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        run(&["gen", "--seed", "1", "--dim", "7", "--class", "parallel"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["gen", "--seed", "-1", "--dim", "2", "--class", "parallel"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["run", "/nonexistent/scenario.json"]).status.code(),
        Some(2)
    );
    assert_eq!(
        run(&["verify-appendix", "--table", "zz", "--seeds", "1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["theorem-suite", "--seeds", "1", "--tol", "-3"])
            .status
            .code(),
        Some(2)
    );

    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.json");
    std::fs::write(
        &file,
        r#"{"schema": "v1", "dim": 2, "metric": {"kind": "euclidean"},
        "one_form": {"kind": "zero"}, "phi": {"kind": "matsumoto"},
        "points": [{"x": [0, 0], "y": [1, 0]}], "checks": ["nope"]}"#,
    )
    .unwrap();
    let out = run(&["run", file.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("checks[0]"));
}

#[test]
fn failing_expectation_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("wrong.json");
    std::fs::write(
        &file,
        r#"{"schema": "v1", "dim": 2, "metric": {"kind": "euclidean"},
        "one_form": {"kind": "zero"}, "phi": {"kind": "matsumoto"},
        "points": [{"x": [0, 0], "y": [1, 0]}], "checks": ["reversibility_ricci"],
        "expect": {"reversibility_ricci": false}}"#,
    )
    .unwrap();
    assert_eq!(run(&["run", file.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn suites_report_exit_status() {
    let out = run(&[
        "verify-appendix",
        "--table",
        "d",
        "--seeds",
        "1",
        "--class",
        "parallel",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let out = run(&["theorem-suite", "--seeds", "1"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["command"], "theorem_suite");
}
