use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};

fn pvc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pvc"))
        .args(args)
        .env("PVC_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn unknown_experiment_is_usage_error() {
    let out = pvc(&["experiment", "ex9"]);
    assert_eq!(out.status.code(), Some(2));
    let out = pvc(&["simulate"]);
    assert_eq!(out.status.code(), Some(2));
    let out = pvc(&["simulate", "--dgp", "nope"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_config_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"sede": 3}"#).unwrap();
    let out = pvc(&["simulate", "--dgp", "ex4", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn numeric_failure_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    fs::write(&data, "u1,u2,u3\n0.2,0.3,0.4\n1.5,0.5,0.5\n0.7,0.1,0.9\n").unwrap();
    let out = pvc(&["fit", "--data", data.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn ex1_margins_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().join("ex1");
    let out = pvc(&["experiment", "ex1", "--gamma", "1.0", "--out", o.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let text = fs::read_to_string(o.join("margins.csv")).unwrap();
    assert!(!text.contains('\r'));
    let rows = csv_rows(&o.join("margins.csv"));
    assert_eq!(rows.len(), 441);
    assert_eq!(rows[1][1], "5.0000000000000003e-2");
    for r in &rows {
        assert!(r[4].parse::<f64>().unwrap() < 1e-6);
    }
    for r in csv_rows(&o.join("pvc_margin.csv")) {
        assert!(r[4].parse::<f64>().unwrap() < 1e-8);
    }
    let measures = csv_rows(&o.join("measures.csv"));
    let refs: Vec<f64> = measures.iter().map(|r| r[3].parse().unwrap()).collect();
    assert!((refs[0] + 1.0 / 1080.0).abs() < 1e-15);
    assert!((refs[2] + 1.0 / 135.0).abs() < 1e-15);
    let tau: f64 = measures[2][2].parse().unwrap();
    assert!((tau + 1.0 / 135.0).abs() < 1e-5);

    let manifest: Value = serde_json::from_str(&fs::read_to_string(o.join("manifest.json")).unwrap()).unwrap();
    let files = manifest["files"].as_array().unwrap();
    assert_eq!(files.len(), 3);
    for f in files {
        let bytes = fs::read(o.join(f["file"].as_str().unwrap())).unwrap();
        assert_eq!(f["sha256"].as_str().unwrap(), hex::encode(Sha256::digest(&bytes)));
    }
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let o = dir.path().join(name);
        let out = pvc(&["simulate", "--dgp", "sarmanov3", "--N", "500", "--seed", "9", "--out", o.to_str().unwrap()]);
        assert!(out.status.success());
        fs::read(o.join("data.csv")).unwrap()
    };
    let a = run("a");
    assert_eq!(a, run("b"));
    let rows = String::from_utf8(a).unwrap();
    assert_eq!(rows.lines().count(), 501);
    assert!(rows.starts_with("u1,u2,u3\n"));
}

#[test]
fn flags_override_config_and_fit_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"dgp": "ex4(5.74)", "N": [50], "seed": 1}"#).unwrap();
    let sim = dir.path().join("sim");
    let out = pvc(&["simulate", "--config", cfg.to_str().unwrap(), "--N", "800", "--out", sim.to_str().unwrap()]);
    assert!(out.status.success());
    let data = sim.join("data.csv");
    assert_eq!(csv_rows(&data).len(), 800);

    let fit = dir.path().join("fit");
    let out = pvc(&["fit", "--data", data.to_str().unwrap(), "--model", "frank", "--out", fit.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(&fit.join("fit.csv"));
    let coords: Vec<&str> = rows.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(coords, ["theta_12", "theta_23", "theta_13;2"]);
    for r in &rows {
        let t: f64 = r[1].parse().unwrap();
        assert!((t - 5.74).abs() < 1.5, "{r:?}");
    }
}

#[test]
fn kld_scan_with_fgm_is_symmetric() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().join("scan");
    let out = pvc(&[
        "kld-scan", "--family", "fgm", "--intercept", "1", "--slope=-2", "--grid=-0.1,0,0.1", "--order", "16", "--out",
        o.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let k: Vec<f64> = csv_rows(&o.join("kld_scan.csv")).iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(k[1] < k[0] && k[1] < k[2]);
    assert!((k[0] - k[2]).abs() < 1e-10);
}

#[test]
fn small_study_writes_long_format() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().join("ex4");
    let out = pvc(&["experiment", "ex4", "--N", "200", "--R", "2", "--order", "12", "--out", o.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(csv_rows(&o.join("replications.csv")).len(), 6);
    let head = fs::read_to_string(o.join("summary.csv")).unwrap();
    assert!(head.starts_with("N,coord,mean_s,mean_j,mean_delta,se_delta,t_stat,p_value\n"));
    let out = pvc(&["experiment", "ex4", "--R", "1", "--out", o.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}
