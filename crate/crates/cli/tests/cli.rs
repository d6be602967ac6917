use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const CW: &str = r#""distribution": {"support": [1], "weights": [1]}"#;

fn run(dir: &Path, cmd: &str, config: &str, extra: &[&str]) -> Output {
    let cfg = dir.join(format!("{cmd}.json"));
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_metastab"))
        .arg(cmd)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .args(extra)
        .output()
        .unwrap()
}

fn ok(dir: &Path, cmd: &str, config: &str) -> PathBuf {
    let out = run(dir, cmd, config, &["--no-timestamp"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    dir.join("out")
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn csv_rows(path: PathBuf) -> Vec<Vec<String>> {
    let text = fs::read_to_string(path).unwrap();
    text.lines().skip(1).map(|l| l.split(',').map(String::from).collect()).collect()
}

#[test]
fn landscape_counts() {
    let dir = TempDir::new().unwrap();
    let cases = [
        (r#"{"support": [77, 45, 33.5], "weights": [0.59, 0.15, 0.26]}, "beta": "113*beta_c", "h": 1740"#, 7),
        (
            r#"{"support": [2.32, 4.92, 5, 11.32], "weights": [0.6, 0.096, 0.033, 0.271]}, "beta": "95.2*beta_c", "h": 7.6"#,
            7,
        ),
    ];
    for (tail, count) in cases {
        let out = ok(dir.path(), "landscape", &format!(r#"{{"distribution": {tail}}}"#));
        let v = json(out.join("landscape.json"));
        assert_eq!(v["count"], count);
        assert_eq!(v["report"]["points"].as_array().unwrap().len(), count);
        assert_eq!(v["report"]["metastable"], true);
        let curve = csv_rows(out.join("tcurve.csv"));
        assert_eq!(curve.len(), 2000);
        assert!(curve.iter().all(|r| r.len() == 4));
    }
}

#[test]
fn landscape_below_critical_temperature() {
    let dir = TempDir::new().unwrap();
    let out = ok(dir.path(), "landscape", &format!(r#"{{{CW}, "beta": 0.5, "h": 0}}"#));
    let v = json(out.join("landscape.json"));
    assert_eq!(v["count"], 1);
    assert_eq!(v["report"]["points"][0]["K"], 0.0);
    assert_eq!(v["report"]["metastable"], false);
    assert!(v.get("generated_at").is_none());
}

#[test]
fn phase_diagram_single_level() {
    let dir = TempDir::new().unwrap();
    let config = format!(r#"{{{CW}, "beta": {{"min": 0.5, "max": 4, "count": 8}}}}"#);
    let out = ok(dir.path(), "phase-diagram", &config);
    let rows = csv_rows(out.join("phase_diagram.csv"));
    assert_eq!(rows.len(), 8);
    let mut last = 0.0;
    for r in rows {
        let beta: f64 = r[0].parse().unwrap();
        if beta <= 1.0 {
            assert_eq!(r[4], "false");
            assert!(r[2].is_empty());
            continue;
        }
        let hc: f64 = r[2].parse().unwrap();
        // fold of tanh(beta (m + h)) = m
        let m = (1.0 - 1.0 / beta).sqrt();
        let closed = m - m.atanh() / beta;
        assert!((hc - closed).abs() < 1e-8, "beta {beta}: {hc} vs {closed}");
        let bh: f64 = r[3].parse().unwrap();
        assert!(bh >= last);
        last = bh;
    }
}

#[test]
fn phase_diagram_grid_and_monotone_product() {
    let dir = TempDir::new().unwrap();
    let config = r#"{"distribution": {"support": [12, 16, 50.5, 24.5], "weights": [0.474, 0.22, 0.111, 0.195]},
        "beta": {"min": "1.5*beta_c", "max": "21*beta_c", "count": 6, "scale": "log"},
        "h": {"min": 50, "max": 150, "count": 3}}"#;
    let out = ok(dir.path(), "phase-diagram", config);
    let rows = csv_rows(out.join("phase_diagram.csv"));
    let products: Vec<f64> = rows.iter().map(|r| r[3].parse().unwrap()).collect();
    assert!(products.windows(2).all(|w| w[1] >= w[0]), "{products:?}");
    let ratio: f64 = rows[0][1].parse().unwrap();
    assert!((ratio - 1.5).abs() < 1e-12);
    assert_eq!(csv_rows(out.join("phase_grid.csv")).len(), 18);
}

#[test]
fn phase_diagram_reentrant_law_endpoints() {
    let dir = TempDir::new().unwrap();
    let config = r#"{"distribution": {"support": [12, 16, 50.5, 24.5], "weights": [0.474, 0.22, 0.111, 0.195]},
        "beta": {"min": "4*beta_c", "max": "21*beta_c", "count": 2}}"#;
    let out = ok(dir.path(), "phase-diagram", config);
    let hc: Vec<f64> = csv_rows(out.join("phase_diagram.csv")).iter().map(|r| r[2].parse().unwrap()).collect();
    assert!(hc[0] > 100.0);
    // frozen from the bisection; still above 100, so no re-entrance at h = 100
    assert!((hc[1] - 193.967).abs() < 0.01, "{}", hc[1]);
}

#[test]
fn validate_ratio_approaches_one() {
    let dir = TempDir::new().unwrap();
    let config = format!(r#"{{{CW}, "beta": 1.3, "h": 0.04, "n_values": [50, 100, 200], "seed": 4, "trials": 150}}"#);
    let out = ok(dir.path(), "validate", &config);
    let rows = csv_rows(out.join("validation.csv"));
    let gaps: Vec<f64> = rows.iter().map(|r| (r[5].parse::<f64>().unwrap() - 1.0).abs()).collect();
    assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "{gaps:?}");
    for r in &rows {
        let exact: f64 = r[1].parse().unwrap();
        let (mean, se): (f64, f64) = (r[2].parse().unwrap(), r[3].parse().unwrap());
        assert!((mean - exact).abs() < 4.0 * se);
    }
}

#[test]
fn simulate_reports_ks() {
    let dir = TempDir::new().unwrap();
    let config = format!(r#"{{{CW}, "beta": 1.3, "h": 0.04, "n": 60, "seed": 2, "trials": 300}}"#);
    let out = ok(dir.path(), "simulate", &config);
    let v = json(out.join("summary.json"));
    let p = v["summary"]["p_value"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&p));
    assert_eq!(v["summary"]["trials"], 300);
    assert_eq!(csv_rows(out.join("samples.csv")).len(), 300);
}

#[test]
fn single_level_fluctuations_vanish() {
    let dir = TempDir::new().unwrap();
    let config = format!(r#"{{{CW}, "beta": 1.3, "h": 0.04, "n": 500, "disorder_draws": 20}}"#);
    let out = ok(dir.path(), "fluctuations", &config);
    let v = json(out.join("fluctuations.json"));
    assert_eq!(v["fluctuation"]["variance_marginal"], 0.0);
    assert_eq!(v["fluctuation"]["variance_multinomial"], 0.0);
    assert_eq!(csv_rows(out.join("fluctuation_histogram.csv")).len(), 1);
}

#[test]
fn outputs_byte_identical() {
    let config = format!(r#"{{{CW}, "beta": 1.3, "h": 0.04, "n": 40, "seed": 7, "trials": 120}}"#);
    let read = |threads: &str| {
        let dir = TempDir::new().unwrap();
        let out = run(dir.path(), "simulate", &config, &["--no-timestamp", "--threads", threads]);
        assert!(out.status.success());
        let d = dir.path().join("out");
        (fs::read(d.join("samples.csv")).unwrap(), fs::read(d.join("summary.json")).unwrap())
    };
    assert_eq!(read("1"), read("2"));

    let dir = TempDir::new().unwrap();
    assert!(run(dir.path(), "simulate", &config, &["--seed", "8", "--no-timestamp"]).status.success());
    let other = fs::read(dir.path().join("out/samples.csv")).unwrap();
    assert_ne!(other, read("1").0);

    assert!(run(dir.path(), "predict", &config, &[]).status.success());
    let v = json(dir.path().join("out/prediction.json"));
    assert!(v["generated_at"].is_u64());
    assert!(v["mean_time"].as_f64().unwrap() > 0.0);
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let code = |cmd: &str, config: &str| run(dir.path(), cmd, config, &[]).status.code().unwrap();

    let bad = run(dir.path(), "landscape", &format!(r#"{{{CW}, "beta": {{"min": 2, "max": 1, "count": 3}}}}"#), &[]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("beta.max"));
    assert_eq!(code("landscape", r#"{"beta": 1}"#), 2);
    assert_eq!(code("predict", &format!(r#"{{{CW}, "beta": 1.3, "h": 0.04}}"#)), 2);
    assert_eq!(code("landscape", &format!(r#"{{{CW}, "beta": {{"min": 1, "max": 2, "count": 3}}}}"#)), 2);

    // symmetric minima at h = 0: neither has a lower minimum
    assert_eq!(code("predict", &format!(r#"{{{CW}, "beta": 1.3, "h": 0, "n": 50}}"#)), 3);
    assert_eq!(code("simulate", &format!(r#"{{{CW}, "beta": 1.3, "h": 0.04, "n": 50, "max_steps": 3}}"#)), 4);

    let missing = Command::new(env!("CARGO_BIN_EXE_metastab"))
        .args(["landscape", "--config", "/nonexistent.json"])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(2));
}
