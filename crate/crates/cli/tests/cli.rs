use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn mtorus(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mtorus"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn analyze_cat_map() {
    let dir = tempfile::tempdir().unwrap();
    let o = mtorus(&["analyze"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = read_json(&dir.path().join("analyze.json"));
    assert_eq!(v["command"], "analyze");
    assert_eq!(v["result"]["kind"], "AllReal");
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let h = v["result"]["entropy_lower_bound"].as_f64().unwrap();
    assert!((h - 2.0 * phi.ln()).abs() < 1e-12);
    assert_eq!(v["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn analyze_rotation_reports_order() {
    let dir = tempfile::tempdir().unwrap();
    let o = mtorus(&["analyze", "--matrix", "0,-1;1,1"], dir.path());
    assert!(o.status.success());
    let v = read_json(&dir.path().join("analyze.json"));
    assert_eq!(v["result"]["rotation_order"], 6);
    assert_eq!(v["result"]["entropy_lower_bound"], 0.0);
}

#[test]
fn same_seed_same_bytes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = mtorus(&["involution", "--seed", "11", "--samples", "40"], d.path());
        assert!(o.status.success());
    }
    for f in ["involution.json", "brackets.csv"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert_eq!(x, y, "{f} differs between runs");
    }
}

#[test]
fn seed_changes_samples() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    mtorus(&["classify", "--seed", "1", "--samples", "10"], a.path());
    mtorus(&["classify", "--seed", "2", "--samples", "10"], b.path());
    let x = std::fs::read(a.path().join("classify.csv")).unwrap();
    let y = std::fs::read(b.path().join("classify.csv")).unwrap();
    assert_ne!(x, y);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| mtorus(args, dir.path()).status.code().unwrap();
    assert_eq!(code(&["analyze", "--matrix", "2,1;1,2"]), 2);
    assert_eq!(code(&["analyze", "--matrix", "1,2,3"]), 2);
    assert_eq!(code(&["analyze", "--tol", "1e-2"]), 2);
    assert_eq!(code(&["invariants", "--matrix", "0,0,1;1,0,-1;0,1,3"]), 3);
    assert_eq!(code(&["involution", "--samples", "5", "--verify"]), 0);
}

#[test]
fn verify_threshold_violation_exits_5() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"horizon": 5, "thresholds": {"integral_drift": 0.0}}"#).unwrap();
    let out = dir.path().join("out");
    let run = |verify: bool| {
        let mut args = vec!["integrate", "--config", cfg.to_str().unwrap()];
        if verify {
            args.push("--verify");
        }
        mtorus(&args, &out).status.code().unwrap()
    };
    assert_eq!(run(false), 0);
    assert_eq!(run(true), 5);
}

#[test]
fn integrate_writes_trajectory_and_conserves_energy() {
    let dir = tempfile::tempdir().unwrap();
    let o = mtorus(&["integrate", "--horizon", "10", "--seed", "3"], dir.path());
    assert!(o.status.success());
    let v = read_json(&dir.path().join("integrate.json"));
    let d = v["result"]["diagnostics"]["max_energy_drift"].as_f64().unwrap();
    assert!(d < 1e-8);
    let mut r = csv::Reader::from_path(dir.path().join("trajectory.csv")).unwrap();
    let header = r.headers().unwrap().clone();
    assert_eq!(&header[0], "t");
    assert_eq!(header.len(), 8);
    assert_eq!(r.records().count(), 11);
}

#[test]
fn classify_vplus_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"initial": {"x": [0.1, 0.2], "z": 0.3, "p": [0.0, 0.0], "pz": 2.0}}"#).unwrap();
    let o = mtorus(&["classify", "--config", cfg.to_str().unwrap()], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = read_json(&dir.path().join("classify.json"));
    assert_eq!(v["result"]["class"]["tag"], "Vplus");
}

#[test]
fn unknown_config_field_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"horizn": 3}"#).unwrap();
    let o = mtorus(&["analyze", "--config", cfg.to_str().unwrap()], dir.path());
    assert!(!o.status.success());
}

#[test]
fn invariants_list_liouville_family() {
    let dir = tempfile::tempdir().unwrap();
    for (m, count) in [("2,1;1,1", 3), ("1,1,0;0,1,1;0,0,1", 4), ("1,0;0,1", 3), ("0,-1;1,0", 3)] {
        let o = mtorus(&["invariants", "--matrix", m], dir.path());
        assert!(o.status.success(), "{m}");
        let v = read_json(&dir.path().join("invariants.json"));
        assert_eq!(v["result"]["first_integrals"].as_array().unwrap().len(), count, "{m}");
    }
}
