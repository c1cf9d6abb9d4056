use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn scanstat(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scanstat"))
        .args(args)
        .current_dir(dir)
        .env_remove("SCAN_WORKERS")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    std::fs::write(dir.join(name), text).unwrap();
    dir.join(name).to_string_lossy().into_owned()
}

fn stdout(o: &Output) -> String {
    assert!(
        o.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn table1_prints_four_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = stdout(&scanstat(dir.path(), &["table1"]));
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "#schema=1");
    assert_eq!(lines.len(), 6);
    assert!(lines[2].starts_with("degenerate,") && lines[2].ends_with(",3.311,1.000"));
    assert!(lines[5].ends_with(",2.939,0.407"));
}

#[test]
fn sample_then_scan_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = write(
        d,
        "sample.json",
        r#"{"model": {"variant": "homogeneous", "n": 30, "p": 0.1},
            "alternative": {"community": [0, 1, 2, 3, 4, 5], "rho": 8.0}}"#,
    );
    let a = stdout(&scanstat(d, &["--config", &cfg, "--seed", "11", "sample"]));
    let b = stdout(&scanstat(
        d,
        &["--config", &cfg, "--seed", "11", "sample", "--out", "g.txt"],
    ));
    assert!(b.is_empty());
    assert_eq!(a, std::fs::read_to_string(d.join("g.txt")).unwrap());
    let c = stdout(&scanstat(d, &["--config", &cfg, "--seed", "12", "sample"]));
    assert_ne!(a, c);

    let scan = write(
        d,
        "scan.json",
        r#"{"model": {"variant": "homogeneous", "n": 30, "p": 0.1}, "graph": "g.txt", "scan": {"r": 6}}"#,
    );
    let out: Value =
        serde_json::from_str(&stdout(&scanstat(d, &["--config", &scan, "scan"]))).unwrap();
    assert_eq!(out["r"], 6);
    assert_eq!(out["certified_exact"], true);
    let strict: Value = serde_json::from_str(&stdout(&scanstat(
        d,
        &["--config", &scan, "scan", "--epsilon", "100"],
    )))
    .unwrap();
    assert_eq!(strict["statistic"], out["statistic"]);
    assert_eq!(strict["reject"], false);
}

#[test]
fn risk_flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = write(
        d,
        "risk.json",
        r#"{"model": {"variant": "homogeneous", "n": 16, "p": 0.15},
            "alternative": {"communities": {"kind": "uniform_random", "count": 2}, "rho": 4.0},
            "scan": {"r": 4}, "replications": 5, "master_seed": 1}"#,
    );
    let one: Value = serde_json::from_str(&stdout(&scanstat(
        d,
        &["--config", &cfg, "--reps", "12", "--workers", "1", "risk"],
    )))
    .unwrap();
    assert_eq!(one["type1"]["trials"], 12);
    let many: Value = serde_json::from_str(&stdout(&scanstat(
        d,
        &["--config", &cfg, "--reps", "12", "--workers", "3", "risk"],
    )))
    .unwrap();
    assert_eq!(one, many);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let lr = write(
        d,
        "lr.json",
        r#"{"model": {"variant": "homogeneous", "n": 40, "p": 0.1}, "r": 3, "rho": 4.0,
            "replications": 10, "budget": 100}"#,
    );
    assert_eq!(
        scanstat(d, &["--config", &lr, "lr-risk"]).status.code(),
        Some(3)
    );
    let bad = write(
        d,
        "bad.json",
        r#"{"model": {"variant": "homogeneous", "n": 10, "p": 1.5}, "r": 2, "rho": 2.0, "replications": 3}"#,
    );
    assert_eq!(
        scanstat(d, &["--config", &bad, "lr-risk"]).status.code(),
        Some(2)
    );
    let garbage = write(d, "garbage.json", "{not json");
    assert_eq!(
        scanstat(d, &["--config", &garbage, "audit"]).status.code(),
        Some(2)
    );
    assert_eq!(
        scanstat(d, &["--config", "missing.json", "audit"])
            .status
            .code(),
        Some(2)
    );
    let degenerate = write(
        d,
        "zero.json",
        r#"{"kind": "community", "model": {"variant": "homogeneous", "n": 10, "p": 0.0}, "community": [0, 1, 2]}"#,
    );
    assert_eq!(
        scanstat(d, &["--config", &degenerate, "boundary"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn lr_risk_small_case() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = write(
        d,
        "lr.json",
        r#"{"model": {"variant": "homogeneous", "n": 8, "p": 0.2}, "r": 3, "rho": 1.0, "replications": 20}"#,
    );
    let out: Value =
        serde_json::from_str(&stdout(&scanstat(d, &["--config", &cfg, "lr-risk"]))).unwrap();
    assert_eq!(out["risk"], 1.0);
    assert_eq!(out["mode"], "exact");
}

#[test]
fn boundary_and_audit_formats() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let surface = write(
        d,
        "surface.json",
        r#"{"kind": "two_weight_surface", "r": 100, "w_max": 6.5, "w_min": 1.0, "n": 10000, "denominator": "global"}"#,
    );
    let csv = stdout(&scanstat(d, &["--config", &surface, "boundary"]));
    assert_eq!(
        csv.lines().nth(1),
        Some("large,medium,small,rho_star,optimal_size,regime,whole_c_rho")
    );
    assert_eq!(csv.lines().count(), 2 + 101);
    let json: Value = serde_json::from_str(&stdout(&scanstat(
        d,
        &["--config", &surface, "--format", "json", "boundary"],
    )))
    .unwrap();
    assert_eq!(json["kinks"][0]["large"], 5);

    let audit = write(
        d,
        "audit.json",
        r#"{"model": {"variant": "homogeneous", "n": 1000, "p": 0.3}, "community": [0, 1, 2, 3, 4, 5, 6, 7, 8, 9]}"#,
    );
    let table = stdout(&scanstat(d, &["--config", &audit, "audit"]));
    assert!(table.lines().next().unwrap().starts_with("name"));
    let json: Value = serde_json::from_str(&stdout(&scanstat(
        d,
        &[
            "--config",
            &audit,
            "--format",
            "json",
            "audit",
            "--threshold",
            "1",
        ],
    )))
    .unwrap();
    assert!(json["entries"]
        .as_array()
        .unwrap()
        .iter()
        .all(|e| e["required"] == 1.0));
}

#[test]
fn sweep_writes_csv_and_markers() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = write(
        d,
        "sweep.json",
        r#"{"kind": "boundary",
            "base": {"kind": "two_weight", "r": 100, "n": 1e4, "w_max": 6.5, "w_min": 1.0, "denominator": "global"},
            "axes": [{"key": "large", "values": [0, 5, 200]}]}"#,
    );
    let out = scanstat(d, &["--config", &cfg, "sweep", "--out", "sweep.csv"]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(d.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(csv.lines().last().unwrap().contains(",error,"));
    assert!(d.join("sweep.csv.meta.json").exists());
    assert_eq!(
        std::fs::read_dir(d.join("sweep.csv.points"))
            .unwrap()
            .count(),
        3
    );
}
