use std::path::Path;
use std::process::{Command, Output};

use qhelly::convex::HPolytope;
use serde_json::Value;

fn qhelly(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qhelly"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn write(dir: &Path, name: &str, value: &Value) -> String {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_vec(value).unwrap()).unwrap();
    path.to_str().unwrap().to_string()
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

#[test]
fn select_then_verify_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let fam = write(
        dir.path(),
        "fam.json",
        &serde_json::json!({"kind": "random_polytope", "n": 3, "count": 12, "seed": 5}),
    );
    let sel = path(dir.path(), "sel.json");
    let out = qhelly(&["select-volume", &fam, "--delta", "1.5", "--out", &sel]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let out = qhelly(&["verify", &fam, &sel]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));

    // a tampered ratio no longer matches the recomputed one
    let mut r: Value = serde_json::from_slice(&std::fs::read(&sel).unwrap()).unwrap();
    r["achieved"] = Value::from(r["achieved"].as_f64().unwrap() * 1.1);
    let bad = write(dir.path(), "bad.json", &r);
    let out = qhelly(&["verify", &fam, &bad]);
    assert_eq!(code(&out), 2);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["passed"], false);
}

#[test]
fn diameter_selection_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let bodies =
        serde_json::to_value(vec![HPolytope::cube(2), HPolytope::cross_polytope(2)]).unwrap();
    let input = write(dir.path(), "bodies.json", &bodies);
    let sel = path(dir.path(), "sel.json");
    assert_eq!(
        code(&qhelly(&[
            "select-diameter",
            &input,
            "--delta",
            "1",
            "--out",
            &sel
        ])),
        0
    );
    let out = qhelly(&["verify", &input, &sel]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn john_on_the_cube() {
    let dir = tempfile::tempdir().unwrap();
    let cube = write(
        dir.path(),
        "cube.json",
        &serde_json::to_value(HPolytope::cube(3)).unwrap(),
    );
    let out = qhelly(&["john", &cube]);
    assert_eq!(code(&out), 0);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["family_indices"].as_array().unwrap().len(), 6);
    for w in v["decomposition"]["weights"].as_array().unwrap() {
        assert!((w.as_f64().unwrap() - 0.5).abs() < 1e-6);
    }
}

#[test]
fn sparsify_reports_its_audit() {
    let dir = tempfile::tempdir().unwrap();
    let fam = write(
        dir.path(),
        "fam.json",
        &serde_json::json!({"kind": "random_polytope", "n": 4, "count": 16, "seed": 2}),
    );
    for strategy in ["barrier", "sampling"] {
        let out = qhelly(&[
            "sparsify",
            &fam,
            "--delta",
            "1",
            "--strategy",
            strategy,
            "--seed",
            "3",
        ]);
        assert_eq!(code(&out), 0);
        let v: Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(v["audit"]["pass"], true);
    }
}

#[test]
fn reports_are_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "cfg.json",
        &serde_json::json!({
            "experiment": "volume",
            "family": {"kind": "random_polytope"},
            "grid": [{"n": 2, "delta": 1.0}, {"n": 3, "delta": 2.0}],
            "trials": 2,
            "seed": 11
        }),
    );
    for format in ["csv", "json"] {
        let (a, b) = (path(dir.path(), "a"), path(dir.path(), "b"));
        assert_eq!(
            code(&qhelly(&["report", &cfg, "--format", format, "--out", &a])),
            0
        );
        assert_eq!(
            code(&qhelly(&["report", &cfg, "--format", format, "--out", &b])),
            0
        );
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }
    let csv = String::from_utf8(qhelly(&["report", &cfg, "--format", "csv"]).stdout).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        "n,delta,pipeline,s,cap,epsilon,achieved,normalized,bound_exponent,oracle_mode,seed,runtime_ms"
    );
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn violated_rows_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "cfg.json",
        &serde_json::json!({
            "experiment": "volume",
            "family": {"kind": "random_polytope"},
            "grid": [{"n": 3, "delta": 1.0}],
            "report_constant": 0.01
        }),
    );
    let out = qhelly(&["report", &cfg]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("exceeds"));
}

#[test]
fn lowerbound_csv() {
    let out = qhelly(&["lowerbound", "--n", "2", "--trials", "5", "--format", "csv"]);
    assert_eq!(code(&out), 0);
    let csv = String::from_utf8(out.stdout).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.lines().nth(1).unwrap().starts_with("2,1,lowerbound,"));
}

#[test]
fn fatal_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let missing = path(dir.path(), "missing.json");
    assert_eq!(code(&qhelly(&["select-volume", &missing])), 1);
    assert_eq!(code(&qhelly(&["no-such-command"])), 1);
    let cube = write(
        dir.path(),
        "cube.json",
        &serde_json::to_value(HPolytope::cube(2)).unwrap(),
    );
    assert_eq!(
        code(&qhelly(&["select-volume", &cube, "--format", "csv"])),
        1
    );
    assert_eq!(code(&qhelly(&["select-volume", &cube, "--delta", "3"])), 1);
    assert_eq!(code(&qhelly(&["--help"])), 0);
}
