//! Every experiment kind, driven through its JSON config.

use vexint::config::ExperimentConfig;
use vexint::report::csv_string;

fn config(kind: &str, exponents: &str, extra: &str) -> ExperimentConfig {
    let text = format!(
        r#"{{
          "experiment": "{kind}",
          "grid": {{"n": 1, "half-extent": 4.0, "points": 512}},
          "exponents": {exponents},
          "theta": [0.3, 0.6],
          "corpus": {{"seed": 17, "count": 4, "coefficients": 80}}
          {extra}
        }}"#
    );
    ExperimentConfig::from_json(&text).unwrap_or_else(|e| panic!("{kind}: {e}"))
}

const VARIABLE: &str = r#"{
  "p0": {"kind": "sine-perturbation", "base": 2.5, "amplitude": 0.5, "frequency": 1.0},
  "p1": {"kind": "plateau-ramp", "left": 3.0, "right": 1.8, "width": 1.0},
  "alpha0": {"kind": "sine-perturbation", "base": 0.3, "amplitude": 0.2, "frequency": 1.0},
  "alpha1": {"kind": "constant", "value": -0.2}
}"#;

const INFINITE: &str = r#"{
  "p0": {"kind": "sine-perturbation", "base": 2.5, "amplitude": 0.5, "frequency": 1.0},
  "p1": null,
  "q0": {"kind": "constant", "value": 2.0},
  "q1": {"kind": "constant", "value": 4.0},
  "alpha0": {"kind": "constant", "value": 0.5},
  "alpha1": {"kind": "constant", "value": -0.2}
}"#;

const CONSTANT_Q: &str = r#"{
  "p0": {"kind": "sine-perturbation", "base": 2.5, "amplitude": 0.5, "frequency": 1.0},
  "p1": {"kind": "constant", "value": 3.0},
  "q0": {"kind": "constant", "value": 2.0},
  "q1": {"kind": "constant", "value": 3.0},
  "alpha0": {"kind": "constant", "value": 0.5},
  "alpha1": {"kind": "constant", "value": -0.2}
}"#;

fn assert_passes(cfg: &ExperimentConfig) {
    let report = vexint::run(cfg).unwrap();
    assert!(report.pass(), "{:?}: {:#?}", cfg.experiment, report.summary);
    assert!(report.summary.rows > 0);
    for r in &report.rows {
        assert_eq!(r.pass, r.margin >= 0.0);
    }
}

#[test]
fn norms_and_roundtrips_pass() {
    assert_passes(&config("norms", VARIABLE, ""));
    assert_passes(&config("roundtrip", VARIABLE, ""));
}

#[test]
fn factorizations_pass() {
    assert_passes(&config("factorize-pp", VARIABLE, ""));
    assert_passes(&config("factorize-pq-infty", INFINITE, ""));
}

#[test]
fn interpolation_experiments_pass() {
    assert_passes(&config("lebesgue-interp", VARIABLE, ""));
    assert_passes(&config("inter-rest", CONSTANT_Q, ""));
}

#[test]
fn holder_with_constant_exponents_passes() {
    let exps = r#"{"p0": {"kind": "constant", "value": 2.0}, "p1": {"kind": "constant", "value": 4.0},
                   "alpha0": {"kind": "constant", "value": 0.5}, "alpha1": {"kind": "constant", "value": -0.25}}"#;
    assert_passes(&config("holder", exps, ""));
    assert_passes(&config("holder", INFINITE, ""));
}

#[test]
fn corrupted_factors_break_domination() {
    let cfg = config("holder", VARIABLE, r#", "holder": {"corrupt-factors": 0.5}"#);
    let report = vexint::run(&cfg).unwrap();
    assert!(!report.pass());
    assert!(report.summary.errors.iter().any(|e| e.contains("domination fails")));
    assert!(report.rows.iter().any(|r| r.check == "domination" && !r.pass));
}

#[test]
fn reports_are_deterministic() {
    let cfg = config("factorize-pq-infty", INFINITE, "");
    let a = vexint::run(&cfg).unwrap();
    let b = vexint::run(&cfg).unwrap();
    assert_eq!(csv_string(&a.rows), csv_string(&b.rows));
    assert_eq!(a.summary.brackets, b.summary.brackets);
}

#[test]
fn wrong_case_is_rejected_at_load() {
    let text = r#"{"experiment": "factorize-pq-infty", "grid": {"n": 1, "half-extent": 4.0, "points": 512},
                   "corpus": {"seed": 1}}"#;
    let err = ExperimentConfig::from_json(text).unwrap_err();
    assert!(err.to_string().contains("exponents") || err.field.contains("exponents"), "{err}");
}

#[test]
fn report_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let report = vexint::run(&config("norms", VARIABLE, "")).unwrap();
    let (csv, json) = report.write(dir.path(), "norms").unwrap();
    assert_eq!(std::fs::read_to_string(csv).unwrap(), csv_string(&report.rows));
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(json).unwrap()).unwrap();
    assert_eq!(summary["rows"], report.rows.len());
    assert_eq!(summary["experiment"], "norms");
}
