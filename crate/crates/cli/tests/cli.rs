use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;
use ssusy_cli::{Report, Status};

fn ssusy(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ssusy")).current_dir(workspace_root()).args(args).output().expect("binary runs")
}

fn workspace_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn report(out: &Output) -> Report {
    serde_json::from_slice(&out.stdout)
        .unwrap_or_else(|e| panic!("stdout is not a report ({e}): {}", String::from_utf8_lossy(&out.stdout)))
}

fn without_timestamp(out: &Output) -> Value {
    let mut v: Value = serde_json::from_slice(&out.stdout).expect("json output");
    v["provenance"]["timestamp_unix"] = Value::Null;
    v
}

#[test]
fn passing_chain_exits_zero() {
    let out = ssusy(&["verify", "--config", "configs/oscillator_chain.json"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    assert!(!r.checks.is_empty());
    assert!(r.checks.iter().all(|c| matches!(c.status, Status::Pass | Status::Measured)));
}

#[test]
fn negative_control_exits_one() {
    let out = ssusy(&["verify", "--config", "configs/negative_control.json"]);
    assert_eq!(out.status.code(), Some(1));
    let r = report(&out);
    let failed: Vec<&str> = r.checks.iter().filter(|c| c.status == Status::Fail).map(|c| c.name.as_str()).collect();
    assert_eq!(failed, ["intertwining", "quasi_hamiltonian"]);
}

#[test]
fn input_errors_exit_two() {
    let cases: &[&[&str]] = &[
        &["verify", "--model", "nonesuch"],
        &["verify", "--model", "cprs", "--set", "checks=[\"no_such_check\"]"],
        &["audit", "--model", "cprs", "--set", "audit.formulas=[\"no_such_formula\"]"],
        &["spectrum", "--model", "cprs", "--set", "spectrum.operators=[\"h_sideways\"]"],
        &["verify", "--model", "cprs", "--set", "model.params.alpha=0.3"],
        &["verify", "--model", "cprs", "--set", "grid.n=1"],
        &["verify", "--config", "does/not/exist.json"],
        &["verify", "--model", "cprs", "--set", "no_equals_sign"],
    ];
    for args in cases {
        let out = ssusy(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(out.stdout.is_empty(), "{args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("ssusy: "), "{args:?}");
    }
}

#[test]
fn custom_model_without_grid_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nogrid.json");
    std::fs::write(
        &path,
        r#"{ "model": { "kind": "custom", "a_tilde": "1", "b1": "x", "b2": "x",
                         "quasi": { "kind": "split_c", "c": -2.0 } } }"#,
    )
    .unwrap();
    let out = ssusy(&["verify", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("grid"));
}

#[test]
fn reports_are_deterministic_apart_from_the_timestamp() {
    for args in [
        &["audit", "--model", "isotonic"][..],
        &["spectrum", "--model", "cprs"][..],
        &["verify", "--config", "configs/pseudo_chain.json"][..],
    ] {
        assert_eq!(without_timestamp(&ssusy(args)), without_timestamp(&ssusy(args)), "{args:?}");
    }
}

#[test]
fn report_round_trips_through_its_schema() {
    let out = ssusy(&["verify", "--config", "configs/swanson_oscillator.json"]);
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    let r: Report = serde_json::from_str(&text).unwrap();
    assert_eq!(r.schema_version, ssusy_cli::report::SCHEMA_VERSION);
    assert_eq!(r.command, "verify");
    assert_eq!(r.to_json() + "\n", text);
}

#[test]
fn audits_never_fail_a_run() {
    for model in ["cprs", "isotonic"] {
        let out = ssusy(&["audit", "--model", model]);
        assert_eq!(out.status.code(), Some(0), "{model}");
        let r = report(&out);
        assert!(!r.audits.is_empty());
        assert!(r.audits.iter().all(|a| a.max_dev.is_finite()));
    }
}

#[test]
fn csv_goes_to_the_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("spectrum.csv");
    let out = ssusy(&["spectrum", "--model", "cprs", "--format", "csv", "--output", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let mut rdr = csv::Reader::from_path(&path).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["section", "name", "index", "value", "tolerance", "status", "x"]);
    let values: Vec<f64> =
        rdr.records().map(|r| r.unwrap()).filter(|r| &r[0] == "eigenvalue").map(|r| r[3].parse().unwrap()).collect();
    assert_eq!(values.len(), 5);
    for (e, want) in values.iter().zip([-3.0, 3.0, 5.0, 7.0, 9.0]) {
        assert!((e - want).abs() < 1e-3, "{e} vs {want}");
    }
}

#[test]
fn set_overrides_fill_from_the_default_grid() {
    let out = ssusy(&["spectrum", "--model", "cprs", "--set", "grid.n=1000"]);
    let r = report(&out);
    assert_eq!((r.config.grid.x_min, r.config.grid.x_max, r.config.grid.n), (-10.0, 10.0, 1000));
}

#[test]
fn isotonic_triplet_is_not_isospectral_on_a_truncated_grid() {
    let out = ssusy(&["verify", "--model", "isotonic"]);
    assert_eq!(out.status.code(), Some(1));
    let r = report(&out);
    let failed: Vec<&str> = r.checks.iter().filter(|c| c.status == Status::Fail).map(|c| c.name.as_str()).collect();
    assert_eq!(failed, ["isospectrality"]);
    assert!(r.notes.iter().any(|n| n.starts_with("isotonic:")));
}
