use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;

use tdph::runner::*;
use tdph::Error;

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn load(name: &str) -> String {
    std::fs::read_to_string(config_path(name)).unwrap()
}

fn short_harmonic() -> String {
    r#"{
        "dim": 24, "t_max": 0.5, "dt": 0.001,
        "profiles": {
            "re_omega": {"kind": "constant", "value": 1.0},
            "im_omega": {"kind": "constant", "value": 0.0},
            "im_beta": {"kind": "constant", "value": 0.0}
        },
        "initial_metric": {"phi": 0.0, "vtheta_zero": 1.0},
        "quantum_numbers": [0, 2, 5]
    }"#
    .to_string()
}

fn short_mild() -> String {
    r#"{
        "dim": 32, "t_max": 0.5, "dt": 0.001,
        "profiles": {
            "re_omega": {"kind": "constant", "value": 1.0},
            "im_omega": {"kind": "sinusoid", "offset": 0.0, "amplitude": 0.1, "frequency": 1.0, "phase": 0.0},
            "im_beta": {"kind": "constant", "value": 0.05}
        },
        "initial_metric": {"phi": -0.2, "vtheta_zero": 1.0}
    }"#
    .to_string()
}

fn field_of(err: Error) -> String {
    match err {
        Error::Validation { field, .. } => field,
        other => panic!("expected a validation error, got {other}"),
    }
}

fn tdph(args: &[&str]) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_tdph")).args(args).output().unwrap().status.code().unwrap()
}

#[test]
fn parse_errors_carry_position() {
    let text = "{\n  \"dim\": 64,\n  oops\n}";
    match parse_scenario(text) {
        Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (3, 3)),
        other => panic!("expected a parse error, got {other:?}"),
    }
    assert!(matches!(parse_scenario("[1, 2]"), Err(Error::Validation { .. })));
}

#[test]
fn validation_names_the_field() {
    let base: serde_json::Value = serde_json::from_str(&short_harmonic()).unwrap();
    let with = |edit: &dyn Fn(&mut serde_json::Value)| {
        let mut v = base.clone();
        edit(&mut v);
        parse_scenario(&v.to_string()).unwrap_err()
    };
    let missing = with(&|v| {
        v["initial_metric"].as_object_mut().unwrap().remove("vtheta_zero");
    });
    assert_eq!(field_of(missing), "initial_metric.vtheta_zero");
    let absent = with(&|v| {
        v.as_object_mut().unwrap().remove("initial_metric");
    });
    assert_eq!(field_of(absent), "initial_metric.vtheta_zero");
    assert_eq!(field_of(with(&|v| v["initial_metric"]["vtheta_zero"] = (-1.0).into())), "initial_metric.vtheta_zero");
    assert_eq!(field_of(with(&|v| v["initial_metric"]["vtheta_zero"] = 0.0.into())), "initial_metric.vtheta_zero");
    assert_eq!(field_of(with(&|v| v["dim"] = 2.into())), "dim");
    assert_eq!(field_of(with(&|v| v["dim"] = 1000.into())), "dim");
    assert_eq!(field_of(with(&|v| v["dt"] = 0.0.into())), "dt");
    assert_eq!(field_of(with(&|v| v["t_max"] = 0.0105.into())), "t_max");
    assert_eq!(field_of(with(&|v| v["colour"] = "red".into())), "colour");
    assert_eq!(field_of(with(&|v| v["profiles"]["extra"] = 1.into())), "profiles.extra");
    assert_eq!(field_of(with(&|v| v["quantum_numbers"] = serde_json::json!([7]))), "quantum_numbers");
    assert_eq!(field_of(with(&|v| v["quantum_numbers"] = serde_json::json!([1, 1]))), "quantum_numbers");
    assert_eq!(field_of(with(&|v| v["superposition"] = serde_json::json!([]))), "superposition");
    assert_eq!(field_of(with(&|v| v["tolerances"] = serde_json::json!({"nonsense": 1.0}))), "tolerances.nonsense");
    assert_eq!(field_of(with(&|v| v["tolerances"] = serde_json::json!({"dyson": -1.0}))), "tolerances.dyson");
    assert_eq!(field_of(with(&|v| v["profiles"]["im_beta"]["kind"] = "cubic".into())), "profiles.im_beta");
}

#[test]
fn defaults_are_applied() {
    let cfg = parse_scenario(&short_mild()).unwrap();
    assert_eq!(cfg.quantum_numbers, vec![0, 1]);
    assert_eq!(cfg.superposition.len(), 2);
    assert_eq!(cfg.seed, 0);
    assert_eq!(cfg.mode, Mode::Generator);
    for (name, value) in TOLERANCE_DEFAULTS {
        assert_eq!(cfg.tolerances.get(name), value);
    }
}

#[test]
fn check_mode_initial_metric_must_match_profiles() {
    let mut v: serde_json::Value = serde_json::from_str(&load("check_static.json")).unwrap();
    v["initial_metric"]["phi"] = 0.31.into();
    assert_eq!(field_of(parse_scenario(&v.to_string()).unwrap_err()), "initial_metric.phi");
    v.as_object_mut().unwrap().remove("initial_metric");
    assert!(parse_scenario(&v.to_string()).unwrap().initial_metric.is_none());
}

#[test]
fn tolerance_overrides() {
    assert_eq!(parse_tolerance_override("dyson=1e-3").unwrap(), ("dyson".to_string(), 1e-3));
    assert!(parse_tolerance_override("dyson").is_err());
    assert_eq!(field_of(parse_tolerance_override("dyson=abc").unwrap_err()), "tolerances.dyson");
}

#[test]
fn harmonic_run_passes_with_linear_phases() {
    let out = run_scenario(&parse_scenario(&short_harmonic()).unwrap()).unwrap();
    assert!(out.report.overall_pass, "{}", out.report.to_json());
    assert_eq!(out.report.checks.len(), TOLERANCE_DEFAULTS.len());
    let series = Series::parse(&out.csv).unwrap();
    assert_eq!(series.rows.len(), 501);
    let t = series.column("t").unwrap();
    for (n, name) in [(0.0, "gamma_0"), (2.0, "gamma_2"), (5.0, "gamma_5")] {
        for (ti, g) in t.iter().zip(series.column(name).unwrap()) {
            assert!((g.unwrap() + (n + 0.5) * ti.unwrap()).abs() < 1e-9);
        }
    }
    assert!(series.column("gamma_1").is_err());
    let eta = series.column("eta_norm").unwrap();
    assert!(eta.iter().all(|e| (e.unwrap() - 1.0).abs() < 1e-12));
    // Lagging stencils leave the first and last rows empty.
    assert_eq!(series.column("dyson_residual").unwrap()[0], None);
    assert!(series.column("schrodinger_residual").unwrap()[250].is_some());
    assert_eq!(out.report.provenance.csv_sha256, sha256_hex(out.csv.as_bytes()));
}

#[test]
fn inconsistent_check_scenario_fails_relations() {
    let consistent = run_scenario(&parse_scenario(&load("check_static.json")).unwrap()).unwrap();
    assert!(consistent.report.overall_pass, "{}", consistent.report.to_json());
    let out = run_scenario(&parse_scenario(&load("check_inconsistent.json")).unwrap()).unwrap();
    assert!(!out.report.overall_pass);
    assert!(!out.report.check("relations").unwrap().pass);
    assert!(out.report.check("relations").unwrap().max_residual.unwrap() > 1e-3);
}

#[test]
fn runs_are_deterministic() {
    let cfg = parse_scenario(&short_mild()).unwrap();
    let a = run_scenario(&cfg).unwrap();
    let b = run_scenario(&cfg).unwrap();
    assert_eq!(a.csv, b.csv);
    assert_eq!(a.report.to_json(), b.report.to_json());
}

#[test]
fn verify_rechecks_reports() {
    let cfg = parse_scenario(&short_mild()).unwrap();
    let out = run_scenario(&cfg).unwrap();
    let json = out.report.to_json();
    let none = BTreeMap::new();
    let v = verify(&out.csv, &json, &none, Some(&cfg)).unwrap();
    assert!(v.overall_pass);
    for (a, b) in v.checks.iter().zip(&out.report.checks) {
        assert_eq!(a, b, "{}", a.name);
    }

    let tight: BTreeMap<String, f64> = [("dyson".to_string(), 0.0)].into();
    let v = verify(&out.csv, &json, &tight, None).unwrap();
    assert!(!v.overall_pass && !v.checks.iter().find(|c| c.name == "dyson").unwrap().pass);

    let unknown: BTreeMap<String, f64> = [("bogus".to_string(), 1.0)].into();
    assert_eq!(field_of(verify(&out.csv, &json, &unknown, None).unwrap_err()), "tolerances.bogus");

    let tampered = out.csv.replacen("-2.0", "-2.1", 1);
    assert_ne!(tampered, out.csv);
    assert!(matches!(verify(&tampered, &json, &none, None), Err(Error::Format(_))));
    let other = parse_scenario(&short_harmonic()).unwrap();
    assert!(matches!(verify(&out.csv, &json, &none, Some(&other)), Err(Error::Format(_))));
    assert!(matches!(verify(&out.csv, "{", &none, None), Err(Error::Format(_))));
}

#[test]
fn demo_scenarios_are_valid() {
    let demos = demo_scenarios();
    let names: Vec<&str> = demos.iter().map(|d| d.0).collect();
    assert_eq!(names, ["harmonic", "td"]);
    for (_, cfg) in &demos {
        let again = parse_scenario(&serde_json::to_string(cfg).unwrap()).unwrap();
        assert_eq!(&again, cfg);
    }
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("harmonic.json");
    std::fs::write(&cfg, short_harmonic()).unwrap();
    let out = dir.path().join("run");
    let (c, o) = (cfg.to_str().unwrap(), out.to_str().unwrap());

    assert_eq!(tdph(&["run", "--config", c, "--out", o, "--quiet"]), 0);
    assert!(out.join("series.csv").exists() && out.join("report.json").exists());
    assert_eq!(tdph(&["verify", "--out", o, "--config", c, "--quiet"]), 0);
    assert_eq!(tdph(&["verify", "--out", o, "--tolerance", "schrodinger=0", "--quiet"]), 1);
    assert_eq!(tdph(&["verify", "--out", o, "--tolerance", "bogus=1", "--quiet"]), 2);
    assert_eq!(tdph(&["run", "--config", c, "--out", o, "--tolerance", "bogus=1", "--quiet"]), 2);

    let csv = std::fs::read_to_string(out.join("series.csv")).unwrap();
    std::fs::write(out.join("series.csv"), csv.replacen('0', "1", 1)).unwrap();
    assert_eq!(tdph(&["verify", "--out", o, "--quiet"]), 2);

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"dim\": }").unwrap();
    assert_eq!(tdph(&["run", "--config", bad.to_str().unwrap(), "--out", o, "--quiet"]), 2);
    assert_eq!(tdph(&["run", "--config", dir.path().join("missing.json").to_str().unwrap(), "--out", o, "--quiet"]), 2);
}

#[test]
fn binary_reports_guard_trips() {
    let dir = tempfile::tempdir().unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&load("td_literal.json")).unwrap();
    v["dim"] = 32.into();
    v["t_max"] = 1.5.into();
    let cfg = dir.path().join("literal.json");
    std::fs::write(&cfg, v.to_string()).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_tdph"))
        .args(["run", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("normalizability"));
}
