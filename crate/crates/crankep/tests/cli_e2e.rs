//! End-to-end checks of the installed binary: exit codes, byte determinism
//! and the diagnostic stream.

use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_crankep"))
}

#[test]
fn spectrum_sweep_is_deterministic_and_exits_zero() {
    let run = || {
        bin()
            .args(["spectrum", "--omega-x", "3", "--omega-y", "2", "--steps", "100"])
            .output()
            .unwrap()
    };
    let a = run();
    let b = run();
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout, "reruns must be byte-identical");
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.starts_with("Omega,wplus_re,wplus_im,wminus_re,wminus_im\n"));
    assert_eq!(text.lines().count(), 101);
}

#[test]
fn usage_errors_exit_two() {
    let out = bin()
        .args(["spectrum", "--omega-x", "-1", "--omega-y", "2"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("omega-x"));

    let unknown = bin().args(["spectrum", "--bogus", "1"]).output().unwrap();
    assert_eq!(unknown.status.code(), Some(2));
}

#[test]
fn computational_errors_exit_one_with_named_diagnostic() {
    // exactly at the critical point the transform must refuse
    let out = bin()
        .args(["--format", "json", "bogoliubov", "--omega", "2"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("EPTooClose"), "diagnostic was: {err}");
}

#[test]
fn out_flag_writes_file() {
    let dir = std::env::temp_dir().join("crankep_e2e");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("sweep.csv");
    let out = bin()
        .args([
            "spectrum",
            "--steps",
            "10",
            "--out",
            path.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 11);
    std::fs::remove_file(&path).unwrap();
}

#[test]
fn encircle_report_is_json_with_permutation() {
    let out = bin()
        .args([
            "--format", "json", "ep-encircle", "--center", "2", "--radius", "0.05", "--loops",
            "2", "--direction", "ccw",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["eigenvalue_permutation"], serde_json::json!([0, 1, 2, 3]));
    let re = v["phase_factor_re"].as_f64().unwrap();
    assert!((re + 1.0).abs() < 0.2);
}
