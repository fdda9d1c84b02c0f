//! End-to-end tests for the `minsurf-cli` binary: exit codes, report files,
//! and mesh artifacts, exercised through the real command-line interface.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_minsurf-cli"))
}

fn tmpdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("minsurf-cli-test-{tag}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("failed to spawn CLI")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("CLI terminated by signal")
}

#[test]
fn verify_claims_exits_zero_and_is_byte_stable() {
    let dir = tmpdir("claims");
    let rep_a = dir.join("a.json");
    let rep_b = dir.join("b.json");
    let out = run(&[
        "verify-claims",
        "--n-min",
        "3",
        "--n-max",
        "4",
        "--report",
        rep_a.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let out = run(&[
        "verify-claims",
        "--n-min",
        "3",
        "--n-max",
        "4",
        "--report",
        rep_b.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let a = fs::read(&rep_a).unwrap();
    let b = fs::read(&rep_b).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b, "report output must be byte-identical across runs");
    let parsed: serde_json::Value = serde_json::from_slice(&a).unwrap();
    let claims = parsed["claims"].as_array().unwrap();
    // Five claim families per dimension, two dimensions checked.
    assert_eq!(claims.len(), 10);
    assert!(claims.iter().all(|c| c["holds"].as_bool() == Some(true)));
}

#[test]
fn verify_claims_empty_range_is_ok() {
    let dir = tmpdir("claims-empty");
    let rep = dir.join("r.json");
    let out = run(&[
        "verify-claims",
        "--n-min",
        "5",
        "--n-max",
        "4",
        "--report",
        rep.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
}

#[test]
fn unknown_surface_is_a_usage_error() {
    let dir = tmpdir("badsurf");
    let out = run(&[
        "build",
        "--surface",
        "q",
        "--out",
        dir.join("q").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn bad_grid_spacing_is_a_usage_error() {
    let dir = tmpdir("badh");
    let out = run(&[
        "build",
        "--surface",
        "d",
        "--dim",
        "3",
        "--h",
        "1.5",
        "--out",
        dir.join("d").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn p_build_in_dim_5_is_refused_with_witness() {
    let dir = tmpdir("p5");
    let out = run(&[
        "build",
        "--surface",
        "p",
        "--dim",
        "5",
        "--out",
        dir.join("p5").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.contains("cone") || err.contains("witness") || err.contains("dimension"),
        "expected an explanation of the obstruction, got: {err}"
    );
}

#[test]
fn d_build_dim3_produces_artifacts_and_report() {
    let dir = tmpdir("d3");
    let out_dir = dir.join("d3");
    let out = run(&[
        "build",
        "--surface",
        "d",
        "--dim",
        "3",
        "--h",
        "0.125",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("d3_merged.off").is_file());
    assert!(out_dir.join("d3_merged.obj").is_file());
    let rep: serde_json::Value =
        serde_json::from_slice(&fs::read(out_dir.join("report.json")).unwrap()).unwrap();
    let builds = rep["builds"].as_array().unwrap();
    assert_eq!(builds.len(), 1);
    let checks = builds[0]["checks"].as_array().unwrap();
    assert!(checks.iter().any(|c| c["name"] == "d_tangency_gradient"));
    assert!(checks.iter().all(|c| c["passed"].as_bool() == Some(true)));
    // The OFF artifact must be a valid triangle mesh header.
    let off = fs::read_to_string(out_dir.join("d3_merged.off")).unwrap();
    assert!(off.starts_with("OFF"));
}

#[test]
fn scherk_build_dim3_produces_artifacts() {
    let dir = tmpdir("s3");
    let out_dir = dir.join("s3");
    let out = run(&[
        "build",
        "--surface",
        "s",
        "--dim",
        "3",
        "--k",
        "2",
        "--sides",
        "0.4",
        "--h",
        "0.125",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("s_merged.off").is_file());
    let rep: serde_json::Value =
        serde_json::from_slice(&fs::read(out_dir.join("report.json")).unwrap()).unwrap();
    let checks = rep["builds"][0]["checks"].as_array().unwrap();
    assert!(checks.iter().all(|c| c["passed"].as_bool() == Some(true)));
}

/// One tetrahedral cell in 4D straddling the x4 = 0 hyperplane; slicing must
/// produce a small valid OFF triangle mesh.
#[test]
fn slice_single_cell_produces_off() {
    let dir = tmpdir("slice");
    let input = dir.join("cell.ndoff");
    fs::write(
        &input,
        "NDOFF\n4\n4 1\n0 0 0 -1\n1 0 0 1\n0 1 0 1\n0 0 1 1\n4 0 1 2 3\n",
    )
    .unwrap();
    let out_path = dir.join("slice.off");
    let out = run(&[
        "slice",
        "--input",
        input.to_str().unwrap(),
        "--normal",
        "0,0,0,1",
        "--offset",
        "0",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let off = fs::read_to_string(&out_path).unwrap();
    assert!(off.starts_with("OFF"));
    // Every vertex of the slice lies on the cutting plane x4 = 0, which for
    // the written 3D coordinates means it was produced by edge interpolation.
    let counts: Vec<usize> = off
        .lines()
        .nth(1)
        .unwrap()
        .split_whitespace()
        .map(|s| s.parse().unwrap())
        .collect();
    assert!(counts[0] >= 3 && counts[1] >= 1);
}

#[test]
fn slice_missing_plane_is_an_error() {
    let dir = tmpdir("slice-miss");
    let input = dir.join("cell.ndoff");
    fs::write(
        &input,
        "NDOFF\n4\n4 1\n0 0 0 1\n1 0 0 1\n0 1 0 2\n0 0 1 3\n4 0 1 2 3\n",
    )
    .unwrap();
    let out = run(&[
        "slice",
        "--input",
        input.to_str().unwrap(),
        "--normal",
        "0,0,0,1",
        "--offset",
        "0",
        "--out",
        dir.join("none.off").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("intersect"), "stderr: {err}");
}
