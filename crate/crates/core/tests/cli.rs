//! End-to-end smoke tests of the `equigrid` binary.

mod common;

use common::fixture;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_equigrid"))
}

#[test]
fn solve_emits_json_with_prices() {
    let out = bin()
        .args(["solve", "--scenario"])
        .arg(fixture("three_node.toml"))
        .args(["--regime", "SW-PC", "--decision", "1,0,2"])
        .output()
        .expect("binary runs");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).expect("valid JSON");
    assert_eq!(v["decision"], serde_json::json!([1, 0, 2]));
    let prices = v["prices"].as_array().expect("prices[m][t][n]");
    assert_eq!(prices.len(), 2);
    assert!(v["objective"].as_f64().unwrap() > 0.0);
}

#[test]
fn solve_rejects_bad_regime_with_exit_2() {
    let out = bin()
        .args(["solve", "--scenario"])
        .arg(fixture("three_node.toml"))
        .args(["--regime", "XX"])
        .output()
        .expect("binary runs");
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn solve_rejects_bad_decision_with_exit_2() {
    let out = bin()
        .args(["solve", "--scenario"])
        .arg(fixture("three_node.toml"))
        .args(["--decision", "9,9,9"])
        .output()
        .expect("binary runs");
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_passes_on_fixture() {
    let out = bin()
        .args(["verify", "--scenario"])
        .arg(fixture("three_node.toml"))
        .args(["--regime", "SW-CO", "--decision", "0,1,0"])
        .output()
        .expect("binary runs");
    assert!(
        out.status.success(),
        "stdout: {} stderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn invest_writes_reports() {
    let dir = tempfile::tempdir().expect("tempdir");
    let out = bin()
        .args(["invest", "--scenario"])
        .arg(fixture("three_node.toml"))
        .args(["--regime", "M-PC", "--out"])
        .arg(dir.path())
        .output()
        .expect("binary runs");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json = std::fs::read_to_string(dir.path().join("report.json")).expect("report.json");
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["regimes"][0]["model"], "M-PC");
    let csv = std::fs::read_to_string(dir.path().join("report.csv")).expect("report.csv");
    assert!(csv.starts_with("model,SW,"));
}

#[test]
fn cluster_subcommand_reports_weights() {
    // two prototypes over 6 weeks of hourly data for one region
    let mut csv = String::from("timestamp,region,demand_mw,wind_availability,solar_availability\n");
    for week in 0..6 {
        let proto = if week < 4 { 0 } else { 1 };
        for h in 0..168 {
            let d = 1000.0 + 500.0 * proto as f64 + (h % 24) as f64;
            csv.push_str(&format!("w{week}h{h},DE,{d},0.{proto}5,0.30\n"));
        }
    }
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("year.csv");
    std::fs::write(&input, csv).unwrap();
    let out = bin()
        .args(["cluster", "--input"])
        .arg(&input)
        .args(["--k", "2"])
        .output()
        .expect("binary runs");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).expect("valid JSON");
    let mut weights: Vec<f64> = v["weights"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect();
    weights.sort_by(f64::total_cmp);
    assert!((weights[0] - 2.0 / 6.0).abs() < 1e-12);
    assert!((weights[1] - 4.0 / 6.0).abs() < 1e-12);
}
