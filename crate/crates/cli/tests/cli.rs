//! End-to-end checks of the `lgsim` binary: exit codes, artifacts and the
//! stdout summary object.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn lgsim(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lgsim"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn summary(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    // exactly one JSON object on stdout
    assert_eq!(text.lines().count(), 1, "stdout: {text}");
    serde_json::from_str(&text).unwrap()
}

#[test]
fn threebox_summary_has_the_paradox_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let s = summary(&lgsim(&["threebox"], dir.path()));
    assert_eq!(s["scenario"], "threebox");
    let k_prime = s["k_prime"]["value"].as_f64().unwrap();
    assert!((k_prime + 13.0 / 9.0).abs() < 1e-10, "K' = {k_prime}");
    assert_eq!(s["k_prime"]["violated"], true);
    assert!(s["delta_a_total"].as_f64().unwrap() < 1e-10);
    assert!(s["delta_total"].as_f64().unwrap() < 1e-10);
}

#[test]
fn scan_64_writes_4096_rows_with_header() {
    let dir = tempfile::tempdir().unwrap();
    let s = summary(&lgsim(
        &["threelevel-scan", "--resolution", "64", "--out", "scan.csv"],
        dir.path(),
    ));
    assert_eq!(s["rows"], 4096);
    let csv = std::fs::read_to_string(dir.path().join("scan.csv")).unwrap();
    assert!(!csv.contains('\r'), "LF line endings only");
    let mut lines = csv.lines();
    let header = lines.next().unwrap();
    assert_eq!(
        header,
        "theta,phi,chi,delta_a_A,delta_a_B,delta_a_C,delta_A,delta_B,delta_C,\
         K,K_A,Delta,Delta_A,weak_K,flags"
    );
    assert_eq!(lines.count(), 4096);
}

#[test]
fn chi_solve_residual_is_tiny() {
    let dir = tempfile::tempdir().unwrap();
    let phi = 0.5 * std::f64::consts::PI;
    let theta = 0.831 * std::f64::consts::PI;
    let s = summary(&lgsim(
        &[
            "chi-solve",
            "--phi",
            &phi.to_string(),
            "--theta",
            &theta.to_string(),
        ],
        dir.path(),
    ));
    assert_eq!(s["found"], true);
    assert!(s["residual"].as_f64().unwrap().abs() < 1e-12);
}

#[test]
fn invalid_config_fails_without_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.toml"), "no_such_key = 1\n").unwrap();
    let out = lgsim(
        &[
            "threelevel-scan",
            "--config",
            "bad.toml",
            "--out",
            "scan.csv",
        ],
        dir.path(),
    );
    assert!(!out.status.success());
    // single-line diagnostic on stderr
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    assert!(!dir.path().join("scan.csv").exists(), "no partial output");
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("cfg.toml"), "resolution = 8\n").unwrap();
    let s = summary(&lgsim(
        &[
            "threelevel-scan",
            "--config",
            "cfg.toml",
            "--resolution",
            "4",
            "--out",
            "scan.csv",
        ],
        dir.path(),
    ));
    assert_eq!(s["rows"], 16);
}

#[test]
fn contour_artifact_is_valid_json_with_refined_vertices() {
    let dir = tempfile::tempdir().unwrap();
    let s = summary(&lgsim(
        &["threelevel-contour", "--resolution", "48", "--out", "contours.json"],
        dir.path(),
    ));
    assert!(s["polylines"].as_u64().unwrap() > 0);
    let artifact: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("contours.json")).unwrap())
            .unwrap();
    for line in artifact["contours"]["polylines"].as_array().unwrap() {
        for v in line.as_array().unwrap() {
            assert!(v["delta_a_B"].as_f64().unwrap().abs() < 1e-8);
        }
    }
}

#[test]
fn custom_scenario_runs_a_configured_protocol() {
    let dir = tempfile::tempdir().unwrap();
    let c = 0.8660254037844387;
    std::fs::write(
        dir.path().join("custom.toml"),
        format!(
            "[custom]\n\
             initial_state = [0.0, 0.0, 1.0]\n\
             u21 = [[{c}, 0.0, 0.5], [0.0, 1.0, 0.0], [-0.5, 0.0, {c}]]\n\
             u32 = [[{c}, 0.0, 0.5], [0.0, 1.0, 0.0], [-0.5, 0.0, {c}]]\n\
             q2 = [1, -1, 1]\n\
             q3 = [1, -1, 1]\n\
             [custom.detector]\n\
             family = \"inverted\"\n"
        ),
    )
    .unwrap();
    let s = summary(&lgsim(&["custom", "--config", "custom.toml"], dir.path()));
    assert_eq!(s["dim"], 3);
    let k = s["k"].as_f64().unwrap();
    let bound = s["k_bound"].as_f64().unwrap();
    assert!(k <= bound + 1e-10, "unambiguous bound must hold: {k} vs {bound}");
    assert!(s["k_a"]["value"].is_f64());
    // M = 3 inverted identity: delta = 2 delta_A
    let delta: Vec<f64> = s["delta"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    let delta_a: Vec<f64> = s["delta_a"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    for (d, da) in delta.iter().zip(&delta_a) {
        assert!((d - 2.0 * da).abs() < 1e-10);
    }
}

#[test]
fn maximize_reports_the_no_signalling_maximum() {
    let dir = tempfile::tempdir().unwrap();
    let s = summary(&lgsim(
        &["threelevel-maximize", "--resolution", "96"],
        dir.path(),
    ));
    assert_eq!(s["mode"], "contour");
    let value = s["value"].as_f64().unwrap();
    assert!((value - 1.464).abs() < 5e-3, "contour max K_A = {value}");
    assert_eq!(s["violated"], true);
}
