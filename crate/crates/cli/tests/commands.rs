use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn solcusp(cwd: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_solcusp"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn lattice_prints_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = solcusp(dir.path(), &["lattice", "--matrix", "2,1,1,1"]);
    assert!(o.status.success());
    let v = stdout_json(&o);
    for key in [
        "stretch",
        "basis",
        "generators",
        "volume",
        "max_isometry_deviation",
    ] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert!((v["volume"].as_f64().unwrap() - 0.962423650119).abs() < 1e-9);
}

#[test]
fn bad_matrix_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = solcusp(dir.path(), &["lattice", "--matrix", "2,1,1,2"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("determinant"));
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        solcusp(dir.path(), &["certify", "--bogus"]).status.code(),
        Some(1)
    );
    assert_eq!(
        solcusp(dir.path(), &["volume", "--warp", "quartic"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(solcusp(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn malformed_run_config_leaves_only_error_json() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.json"), r#"{"matrix": [2, 1, 1, 2]}"#).unwrap();
    let o = solcusp(
        dir.path(),
        &["run", "--config", "bad.json", "--output", "out"],
    );
    assert_eq!(o.status.code(), Some(1));
    let names: Vec<_> = std::fs::read_dir(dir.path().join("out"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    assert_eq!(names, ["error.json"]);
    let e = read_json(&dir.path().join("out/error.json"));
    assert_eq!(e["status"], "error");
    assert_eq!(e["exit_code"], 1);
}

#[test]
fn unknown_config_fields_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("c.json"),
        r#"{"matrix": [2, 1, 1, 1], "colour": 3}"#,
    )
    .unwrap();
    let o = solcusp(
        dir.path(),
        &["run", "--config", "c.json", "--output", "out"],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(dir.path().join("out/error.json").exists());
}

#[test]
fn build_warp_reports_margins_and_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = solcusp(
        dir.path(),
        &[
            "build-warp",
            "--t0",
            "-4",
            "--t1",
            "-1",
            "--step",
            "0.01",
            "--margin",
            "1e-6",
            "--csv",
            "w.csv",
        ],
    );
    assert!(o.status.success());
    let v = stdout_json(&o);
    assert_eq!(v["family"], "interpolated");
    assert_eq!(v["T1"], -1.0);
    for k in ["a", "b", "c", "d"] {
        assert!(v["min_margins"][k].as_f64().unwrap() > 1e-6);
    }
    let csv = std::fs::read_to_string(dir.path().join("w.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,f,df,d2f,margin_a,margin_b,margin_c,margin_d"
    );
    assert_eq!(lines.count(), 701);
}

#[test]
fn verify_riemann_reports_the_labelling() {
    let dir = tempfile::tempdir().unwrap();
    let o = solcusp(dir.path(), &["verify-riemann", "--warp", "shifted-exp"]);
    assert!(o.status.success());
    let v = stdout_json(&o);
    assert_eq!(v["index_map"], serde_json::json!(["x", "y", "z", "t"]));
    assert_eq!(v["matched"], true);
    assert!(v["extra_nonzero"].as_array().unwrap().is_empty());
    assert!(v["pipeline_agreement"].as_f64().unwrap() <= 1e-6);
}

#[test]
fn certify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let quick = ["--samples", "1000", "--refine", "4", "--step", "0.5"];
    let run = |extra: &[&str]| {
        let mut args = vec!["certify", "--output", "c"];
        args.extend_from_slice(extra);
        args.extend_from_slice(&quick);
        solcusp(dir.path(), &args)
    };
    let ok = run(&["--warp", "shifted-exp", "--t-min", "-2", "--t-max", "2"]);
    assert_eq!(ok.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("c/certify.csv")).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        "t,k_min,k_max,margin_a,margin_b,margin_c,margin_d,method_agreement"
    );
    assert_eq!(csv.lines().count(), 10);

    let violation = run(&[
        "--warp",
        "pure-exp",
        "--t-min",
        "0.5",
        "--t-max",
        "2",
        "--skip-condition-gate",
    ]);
    assert_eq!(violation.status.code(), Some(2));
    let report = read_json(&dir.path().join("c/certify.json"));
    assert!(report["witness"]["k"].as_f64().unwrap() > 0.0);

    // near t = 30 the top curvature is about -e^-30, above the -1e-9 floor
    let faint = run(&["--warp", "shifted-exp", "--t-min", "29", "--t-max", "30"]);
    assert_eq!(faint.status.code(), Some(3));

    // f' = 0 leaves margin (b) at zero; refused before sampling
    let refused = run(&["--warp", "constant:2", "--t-min", "-1", "--t-max", "1"]);
    assert_eq!(refused.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&refused.stderr).contains("condition (b)"));
}

#[test]
fn volume_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let o = solcusp(
        dir.path(),
        &[
            "volume",
            "--warp",
            "shifted-exp",
            "--vol-c",
            "1",
            "--t0",
            "0",
            "--tol",
            "1e-10",
        ],
    );
    assert!(o.status.success());
    let v = stdout_json(&o);
    assert!((v["integral"].as_f64().unwrap() - 5.0 / 6.0).abs() <= 1e-10);
    for key in ["tail_bound", "cutoff", "total"] {
        assert!(v.get(key).is_some());
    }
}

#[test]
fn summary_reruns_to_identical_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"certify": {"t_min": -3, "t_max": 3, "t_step": 0.5, "n_samples": 2000, "n_refine": 4}}"#;
    std::fs::write(dir.path().join("c.json"), cfg).unwrap();
    let first = solcusp(
        dir.path(),
        &["run", "--config", "c.json", "--output", "a", "--jobs", "2"],
    );
    assert_eq!(first.status.code(), Some(0));
    let summary = read_json(&dir.path().join("a/summary.json"));
    assert_eq!(summary["globally_negative"], true);
    assert_eq!(summary["riemann_table_matched"], true);

    // the embedded config names directory "a", so the rerun overwrites it
    let before = std::fs::read(dir.path().join("a/certify.json")).unwrap();
    let again = solcusp(dir.path(), &["run", "--config", "a/summary.json"]);
    assert_eq!(again.status.code(), Some(0));
    assert_eq!(
        before,
        std::fs::read(dir.path().join("a/certify.json")).unwrap()
    );
}

#[test]
fn pure_exp_run_reports_failed_conditions() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{
        "warp": {"family": "pure_exp"},
        "certify": {"t_min": 0.1, "t_max": 5, "t_step": 0.5, "n_samples": 1000, "n_refine": 4,
                    "require_conditions": false}
    }"#;
    std::fs::write(dir.path().join("c.json"), cfg).unwrap();
    let o = solcusp(
        dir.path(),
        &["run", "--config", "c.json", "--output", "out"],
    );
    assert_eq!(o.status.code(), Some(2));
    let s = read_json(&dir.path().join("out/summary.json"));
    assert_eq!(s["conditions_hold"], false);
    assert_eq!(s["globally_negative"], false);
}
