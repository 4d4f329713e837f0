use std::path::Path;
use std::process::Command;

use induced_contraction::experiments::{parse_config, ExperimentConfig, EXPERIMENTS};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_induced-contraction"))
}

fn run_config(dir: &Path, json: &str) -> (i32, String) {
    let cfg = dir.join("config.json");
    std::fs::write(&cfg, json).unwrap();
    let out = bin().arg("run").arg(&cfg).arg("--out").arg(dir.join("out")).output().unwrap();
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stderr).into_owned())
}

#[test]
fn defaults_round_trip_through_json() {
    for name in EXPERIMENTS {
        let cfg = ExperimentConfig::default_for(name).unwrap();
        let text = serde_json::to_string(&cfg.to_json()).unwrap();
        let back = parse_config(&text).unwrap_or_else(|e| panic!("{name}: {e:?}"));
        assert_eq!(back, cfg, "{name}");
        assert_eq!(back.name(), name);
    }
}

#[test]
fn partial_config_is_completed_from_defaults() {
    let cfg = parse_config(r#"{"experiment": "lorenz", "samples": 12}"#).unwrap();
    let json = cfg.to_json();
    assert_eq!(json["samples"], 12);
    assert_eq!(json["seed"], ExperimentConfig::default_for("lorenz").unwrap().to_json()["seed"]);
}

#[test]
fn run_writes_echoed_config_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let (code, err) = run_config(dir.path(), r#"{"experiment": "lorenz", "samples": 20}"#);
    assert_eq!(code, 0, "{err}");
    let out = dir.path().join("out");
    let echoed: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("lorenz_config.json")).unwrap()).unwrap();
    assert_eq!(echoed["samples"], 20);
    assert!(echoed["model"]["sigma"].is_number());
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("lorenz_report.json")).unwrap()).unwrap();
    assert_eq!(report["rho_centred"]["negative_definite"], 20);
}

#[test]
fn run_writes_csv_traces() {
    let dir = tempfile::tempdir().unwrap();
    let (code, err) = run_config(dir.path(), r#"{"experiment": "kapitza", "horizon": 2, "settle_time": 1}"#);
    assert_eq!(code, 0, "{err}");
    let csv = std::fs::read_to_string(dir.path().join("out/kapitza_trajectory.csv")).unwrap();
    assert!(csv.starts_with("t,reference,y,y_minus_dy,u\n"));
    assert!(csv.lines().count() > 10);
}

#[test]
fn validation_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    for bad in [
        "not json",
        "{}",
        r#"{"experiment": "pendulum"}"#,
        r#"{"experiment": "kapitza", "omega": -1}"#,
        r#"{"experiment": "chua", "bogus": 1}"#,
        r#"{"experiment": "lorenz", "samples": "many"}"#,
    ] {
        let (code, err) = run_config(dir.path(), bad);
        assert_eq!(code, 2, "{bad}: {err}");
        assert!(!err.is_empty());
    }
}

#[test]
fn all_violations_are_listed() {
    let errs = parse_config(r#"{"experiment": "kapitza", "omega": 0, "band": -1, "extra": true}"#).unwrap_err();
    for path in ["omega", "band", "extra"] {
        assert!(errs.iter().any(|e| e.starts_with(path)), "{path} missing from {errs:?}");
    }
}

#[test]
fn numerical_failure_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let (code, err) = run_config(dir.path(), r#"{"experiment": "chua", "policy": {"method": "rk4", "h": 2}}"#);
    assert_eq!(code, 3, "{err}");
}

#[test]
fn verify_exit_status_follows_the_verdict() {
    let ok = bin().args(["verify", "--filter=properties", "--jobs", "2"]).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    let table = String::from_utf8_lossy(&ok.stdout);
    assert!(table.contains("properties (overall)"));
    assert!(!table.contains("kapitza"));
    let red = bin().args(["verify", "--filter=kapitza"]).output().unwrap();
    assert_ne!(red.status.code(), Some(0));
}
