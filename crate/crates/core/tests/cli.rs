//! Exit-code contract of the command-line front end, exercised per
//! subcommand: 0 = success / property holds, 1 = property fails, 2 = error.

use std::path::PathBuf;
use std::process::Command;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("testdata").join(name)
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_salience-match"))
        .args(args)
        .output()
        .expect("spawn cli");
    (
        out.status.code().expect("exit code"),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn verify_exit_codes() {
    let two = fixture("two_sm.json");
    let two = two.to_str().unwrap();
    // a-optimal matching of this market has no potential blockers: robust
    let (code, out, _) = run(&[
        "verify", "--instance", two, "--matching", "a-optimal", "-k", "2", "-r", "0.5",
    ]);
    assert_eq!(code, 0, "robust matching must exit 0");
    assert!(out.contains("\"robust\": true"));
    // b-optimal matching flips at radius 0.1 < 0.5: not robust, witness given
    let (code, out, _) = run(&[
        "verify", "--instance", two, "--matching", "b-optimal", "-k", "2", "-r", "0.5",
    ]);
    assert_eq!(code, 1, "non-robust matching must exit 1");
    assert!(out.contains("\"robust\": false") && out.contains("\"witness\""));
    // missing file is an error
    let (code, _, err) = run(&[
        "verify", "--instance", "/nonexistent.json", "-k", "2", "-r", "0.1",
    ]);
    assert_eq!(code, 2);
    assert!(err.contains("error"));
}

#[test]
fn radius_exit_codes() {
    let two = fixture("two_sm.json");
    let two = two.to_str().unwrap();
    let (code, out, _) = run(&["radius", "--instance", two, "-k", "2"]);
    assert_eq!(code, 0);
    assert!(out.contains("\"radius\""));
    // unknown agent name in the matching spec
    let (code, _, err) = run(&["radius", "--instance", two, "--matching", "zz,b1", "-k", "2"]);
    assert_eq!(code, 2);
    assert!(err.contains("error"));
    // support budget outside 1..=m
    let (code, _, _) = run(&["radius", "--instance", two, "-k", "0"]);
    assert_eq!(code, 2);
}

#[test]
fn base_exit_codes() {
    let app = fixture("appendix_a.json");
    let app = app.to_str().unwrap();
    let (code, out, _) = run(&["base", "--instance", app]);
    assert_eq!(code, 0);
    assert!(out.contains("\"base_radius\""));
    let (code, _, _) = run(&["base", "--instance", app, "--eps-base", "-0.5"]);
    assert_eq!(code, 2, "negative slack parameter must be rejected");
}

#[test]
fn search_exit_codes() {
    let app = fixture("appendix_a.json");
    let app = app.to_str().unwrap();
    let (code, out, _) = run(&["search", "--instance", app, "-k", "2", "--budget", "100"]);
    assert_eq!(code, 0);
    assert!(out.contains("\"certified\""));
    let (code, _, _) = run(&["search", "--instance", "/nonexistent.json", "-k", "2"]);
    assert_eq!(code, 2);
}

#[test]
fn frontier_exit_codes() {
    let two = fixture("two_sm.json");
    let two = two.to_str().unwrap();
    let (code, out, _) = run(&["frontier", "--instance", two, "-k", "2"]);
    assert_eq!(code, 0);
    assert!(out.contains("tau,c_lb,c_ub,matching"));
    // instance without a costs table
    let app = fixture("appendix_a.json");
    let (code, _, err) = run(&["frontier", "--instance", app.to_str().unwrap(), "-k", "2"]);
    assert_eq!(code, 2);
    assert!(err.contains("costs"));
}

#[test]
fn region_exit_codes() {
    let app = fixture("appendix_a.json");
    let app = app.to_str().unwrap();
    let (code, out, _) = run(&["region", "--instance", app]);
    assert_eq!(code, 0);
    assert!(out.contains("\"volume\""));
    let (code, _, _) = run(&["region", "--instance", app, "--volume", "bogus"]);
    assert_eq!(code, 2);
}

#[test]
fn sweep_exit_codes() {
    let (code, out, _) = run(&["sweep", "--n-values", "4", "--trials", "5"]);
    assert_eq!(code, 0);
    assert!(out.contains("n,trials,mode,fraction"));
    let (code, _, _) = run(&["sweep", "--n-values", "abc", "--trials", "5"]);
    assert_eq!(code, 2);
    // the any-stable mode enumerates the full lattice and caps the size
    let (code, _, _) = run(&[
        "sweep", "--n-values", "64", "--trials", "5", "--mode", "any-stable",
    ]);
    assert_eq!(code, 2);
}

#[test]
fn bad_subcommand_exits_2_and_help_exits_0() {
    let (code, _, _) = run(&["bogus"]);
    assert_eq!(code, 2);
    let (code, _, _) = run(&["--help"]);
    assert_eq!(code, 0);
}
