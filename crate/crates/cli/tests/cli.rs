use std::path::Path;
use std::process::{Command, Output};

fn jdinfer(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jdinfer"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, body: &str) {
    std::fs::write(dir.join(name), body).unwrap();
}

#[test]
fn simulate_emits_x_and_y_columns() {
    let tmp = tempfile::tempdir().unwrap();
    write(
        tmp.path(),
        "m.json",
        r#"{"model":"levy","params":[0.1,0.5,0.7],"x0":0.0}"#,
    );
    let out = jdinfer(
        tmp.path(),
        &[
            "simulate", "--model", "m.json", "--steps", "10", "--paths", "2",
        ],
    );
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "path_id,t,X,Y1,Y2,Y3");
    assert_eq!(lines.count(), 22);
    // Y¹ = t for the Lévy model
    let last: Vec<f64> = text
        .lines()
        .last()
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    assert_eq!(last[1], 1.0);
    assert!((last[3] - 1.0).abs() < 1e-12);
}

#[test]
fn estimate_recovers_explicit_estimator() {
    let tmp = tempfile::tempdir().unwrap();
    let mut csv = String::from("t,X\n");
    let xs = [1.0, 1.02, 1.01, 1.05, 1.04];
    for (k, x) in xs.iter().enumerate() {
        csv.push_str(&format!("{},{}\n", k as f64 * 0.25, x));
    }
    write(tmp.path(), "obs.csv", &csv);
    let a = jdinfer(
        tmp.path(),
        &["estimate", "--data", "obs.csv", "--epsilon", "0.1"],
    );
    let b = jdinfer(
        tmp.path(),
        &[
            "estimate",
            "--data",
            "obs.csv",
            "--epsilon",
            "0.1",
            "--init",
            "0.0,0.5",
        ],
    );
    assert!(
        a.status.success() && b.status.success(),
        "{}",
        String::from_utf8_lossy(&b.stderr)
    );
    let ja: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    let jb: serde_json::Value = serde_json::from_slice(&b.stdout).unwrap();
    let mu: f64 = xs.windows(2).map(|w| (w[1] - w[0]) / w[0]).sum();
    assert!((ja["theta_hat"][0].as_f64().unwrap() - mu).abs() < 1e-14);
    for i in 0..2 {
        let (x, y) = (
            ja["theta_hat"][i].as_f64().unwrap(),
            jb["theta_hat"][i].as_f64().unwrap(),
        );
        assert!((x - y).abs() < 1e-10);
    }
}

#[test]
fn estimate_rejects_uneven_grid() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "obs.csv", "t,X\n0,1\n0.3,1.1\n1,1.2\n");
    let out = jdinfer(
        tmp.path(),
        &["estimate", "--data", "obs.csv", "--epsilon", "0.1"],
    );
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("equally spaced"));
}

#[test]
fn price_report_is_consistent() {
    let tmp = tempfile::tempdir().unwrap();
    write(
        tmp.path(),
        "p.json",
        r#"{"model":{"model":"black_scholes","params":[0.2,1.0],"epsilon":0.1,"x0":1.0},
            "functional":{"kind":"smoothed_call_terminal","K":0.75,"r":0.05,"T":1.0},"steps":50}"#,
    );
    let out = jdinfer(
        tmp.path(),
        &["price", "--config", "p.json", "--B", "1000", "--seed", "2"],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let j: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let h = j["h_hat"].as_f64().unwrap();
    let (lo, hi) = (j["ci"][0].as_f64().unwrap(), j["ci"][1].as_f64().unwrap());
    assert!(lo <= h && h <= hi);
    assert!(j["asy_var"].as_f64().unwrap() >= 0.0);
    assert!(j["z_hat"].is_null());
}

#[test]
fn experiment_writes_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    write(
        tmp.path(),
        "e.json",
        r#"{"experiment":"black_scholes","n":50,"paths":1000,"replications":30,"root_seed":3,"reference_paths":2000}"#,
    );
    let out = jdinfer(
        tmp.path(),
        &["experiment", "--config", "e.json", "--out", "o"],
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rows = std::fs::read_to_string(tmp.path().join("o/replications.csv")).unwrap();
    assert_eq!(rows.lines().count(), 31);
    let hist = std::fs::read_to_string(tmp.path().join("o/histogram.csv")).unwrap();
    assert_eq!(hist.lines().count(), 33);
    assert!(tmp.path().join("o/qq.csv").exists());
    assert!(tmp.path().join("o/summary.json").exists());
}

#[test]
fn bad_config_is_reported() {
    let tmp = tempfile::tempdir().unwrap();
    write(
        tmp.path(),
        "e.json",
        r#"{"experiment":"black_scholes","n":50,"paths":1000,"replications":10,"root_seed":3}"#,
    );
    let out = jdinfer(tmp.path(), &["experiment", "--config", "e.json"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("replications"));
}
