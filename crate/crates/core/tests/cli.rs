use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn lsls(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lsls"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("LSLS_WORKERS")
        .output()
        .expect("binary runs")
}

fn error_of(o: &Output) -> Value {
    let text = String::from_utf8_lossy(&o.stderr);
    let v: Value = serde_json::from_str(text.trim()).unwrap_or_else(|e| panic!("{e}: {text}"));
    v["error"].clone()
}

#[test]
fn synthesize_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let o = lsls(
        &[
            "synthesize",
            "--chain",
            "20",
            "--alpha",
            "0.4",
            "--rho",
            "1.25",
            "--density",
            "0.5",
            "--d",
            "5",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["controller.json", "clm.json", "cost.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let cost: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("cost.json")).unwrap()).unwrap();
    let h2 = cost["h2_cost"].as_f64().unwrap();
    let riccati = cost["riccati_cost"].as_f64().unwrap();
    assert!(h2.is_finite() && h2 > 20.0);
    assert!((h2 - riccati).abs() < 1e-8 * h2);
    assert_eq!(cost["achievability"]["passed"], Value::Bool(true));
    assert_eq!(cost["communication_audit"]["violations"].as_array().unwrap().len(), 0);
    let ctrl: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("controller.json")).unwrap()).unwrap();
    assert_eq!(ctrl["schema_version"], 1);
    assert_eq!(ctrl["subcontrollers"].as_array().unwrap().len(), 20);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [a.path(), b.path()] {
        assert!(lsls(&["synthesize", "--chain", "12", "--d", "2"], d).status.success());
        assert!(lsls(
            &["simulate", "--chain", "12", "--d", "2", "--steps", "50", "--seed", "3"],
            d
        )
        .status
        .success());
    }
    for f in [
        "controller.json",
        "clm.json",
        "cost.json",
        "trajectory.csv",
        "simulation.json",
    ] {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn validate_rejects_identity_communication() {
    let dir = tempfile::tempdir().unwrap();
    let o = lsls(
        &["validate", "--chain", "6", "--d", "1", "--comm-hops", "0"],
        dir.path(),
    );
    assert!(!o.status.success());
    let err = error_of(&o);
    assert_eq!(err["code"], "pattern_violation");
    let first = &err["details"]["errors"][0];
    assert_eq!(first["kind"], "localization_not_in_communication");
}

#[test]
fn validate_accepts_default_chain() {
    let dir = tempfile::tempdir().unwrap();
    let o = lsls(&["validate", "--chain", "10", "--d", "2"], dir.path());
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("validation.json")).unwrap()).unwrap();
    assert_eq!(v["columns"].as_array().unwrap().len(), 10);
}

#[test]
fn sweep_cost_column_is_monotone() {
    let dir = tempfile::tempdir().unwrap();
    let o = lsls(
        &["sweep", "--chain", "12", "--d", "2", "--fir-horizons", "2:14"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut rdr = csv::Reader::from_path(dir.path().join("sweep.csv")).unwrap();
    let costs: Vec<f64> = rdr
        .records()
        .filter_map(|r| r.unwrap().get(5).and_then(|s| s.parse().ok()))
        .collect();
    assert!(costs.len() > 3);
    for w in costs.windows(2) {
        assert!(w[1] <= w[0] + 1e-9, "{w:?}");
    }
    assert!(dir.path().join("sweep_timing.csv").exists());
}

#[test]
fn infeasible_fir_reports_columns() {
    let dir = tempfile::tempdir().unwrap();
    let o = lsls(&["compare-fir", "--density", "0.5", "--T", "3"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let err = error_of(&o);
    assert_eq!(err["code"], "fir_infeasible");
    assert!(!err["details"]["columns"].as_array().unwrap().is_empty());
}

#[test]
fn config_file_and_parse_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, r#"{"schema_version": 1, "chain": 8, "d": 1, "T": 12}"#).unwrap();
    let o = lsls(&["compare-fir", "--config", cfg.to_str().unwrap()], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("compare_fir.json")).unwrap()).unwrap();
    assert_eq!(v["horizon"], 12);
    assert_eq!(v["fir_variables"].as_array().unwrap().len(), 8);

    fs::write(&cfg, r#"{"schema_version": 99}"#).unwrap();
    let o = lsls(&["synthesize", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_of(&o)["code"], "config_parse");

    let o = lsls(&["synthesize", "--d", "many"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_of(&o)["code"], "config_parse");
}

#[test]
fn plant_file_input() {
    let dir = tempfile::tempdir().unwrap();
    let plant = dir.path().join("plant.json");
    fs::write(
        &plant,
        r#"{"schema_version": 1,
            "plant": {"a": {"rows": 1, "cols": 1, "data": [[0.5]]},
                      "b": {"rows": 1, "cols": 1, "data": [[1.0]]},
                      "partition": {"n": [1], "m": [1]}}}"#,
    )
    .unwrap();
    let o = lsls(&["synthesize", "--plant", plant.to_str().unwrap()], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&String::from_utf8_lossy(&o.stdout)).unwrap();
    assert!((v["h2_cost"].as_f64().unwrap() - 1.1327822185373186).abs() < 1e-9);
}

#[test]
fn unlocalizable_columns_are_listed() {
    let dir = tempfile::tempdir().unwrap();
    let plant = dir.path().join("plant.json");
    // Only the first state is actuated and d = 0, so no boundary state can be held at zero.
    fs::write(
        &plant,
        r#"{"schema_version": 1,
            "plant": {"a": {"rows": 3, "cols": 3, "data": [[1.2, 0.3, 0.0], [0.3, 1.2, 0.3], [0.0, 0.3, 1.2]]},
                      "b": {"rows": 3, "cols": 1, "data": [[1.0], [0.0], [0.0]]},
                      "partition": {"n": [1, 1, 1], "m": [1, 0, 0]}}}"#,
    )
    .unwrap();
    let o = lsls(
        &[
            "synthesize",
            "--plant",
            plant.to_str().unwrap(),
            "--d",
            "0",
            "--comm-hops",
            "1",
        ],
        dir.path(),
    );
    assert!(!o.status.success());
    let err = error_of(&o);
    assert_eq!(err["code"], "column_not_localizable");
    let cols: Vec<u64> = err["details"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["column"].as_u64().unwrap())
        .collect();
    assert_eq!(cols, vec![0, 1, 2]);
}
