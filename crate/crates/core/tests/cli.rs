use std::path::Path;
use std::process::{Command, Output};

fn cbd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cbd"))
        .args(args)
        .output()
        .unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generate_then_analyze_pr_box() {
    let dir = tempfile::tempdir().unwrap();
    let sys = dir.path().join("pr.json");
    let out = cbd(&["generate", "--kind", "pr_box", "--out", path(&sys)]);
    assert!(out.status.success());
    let out = cbd(&["analyze", "--system", path(&sys)]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["delta_min_lp"].as_f64(), Some(1.0));
    assert_eq!(report["jpd_exists"].as_bool(), Some(false));
    assert_eq!(report["degenerate_coupling"].as_bool(), Some(true));
}

#[test]
fn trials_csv_analysis_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("t.csv");
    let out = cbd(&[
        "generate",
        "--kind",
        "tsirelson",
        "--trials",
        "400",
        "--seed",
        "3",
        "--out",
        path(&csv),
    ]);
    assert!(out.status.success());
    let run = || {
        cbd(&[
            "analyze",
            "--trials",
            path(&csv),
            "--bootstrap",
            "20",
            "--seed",
            "5",
        ])
    };
    let (a, b) = (run(), run());
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let report: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(report["bootstrap"]["replicates"].as_u64(), Some(20));
}

#[test]
fn input_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.csv");
    assert_eq!(
        cbd(&["analyze", "--trials", path(&missing)]).status.code(),
        Some(2)
    );

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "context_i,context_j,a,b\n1,1,1,0\n").unwrap();
    let out = cbd(&["analyze", "--trials", path(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    let sys = dir.path().join("sys.json");
    cbd(&["generate", "--kind", "tsirelson", "--out", path(&sys)]);
    let out = cbd(&["analyze", "--system", path(&sys), "--bootstrap", "10"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn infeasible_injection_is_an_input_error() {
    let out = cbd(&[
        "generate",
        "--kind",
        "signaling_injection",
        "--params",
        "base=pr_box,da1=0.3",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_passes() {
    let out = cbd(&["verify", "--samples", "40", "--seed", "9"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
}
