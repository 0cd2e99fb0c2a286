use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;

use plapwave_cli::*;
use serde_json::Value;

fn config(experiment: &str, extra: &str) -> String {
    format!(
        r#"{{
  "experiment": {experiment},
  "seed": 42,
  "problem": {{
    "p": 2.5,
    "mesh": {{"n_elements": 16}},
    "source": {{"kind": "POWER", "a": 0.5, "r": 1.5}},
    "u0": {{"offset": 0.2, "cos": [0.6]}},
    "u1": {{"sin": [0.5]}},
    "t_final": 0.5,
    "dt": 0.02{extra}
  }}
}}"#
    )
}

fn run(text: &str, dir: &Path) -> (RunReport, Manifest) {
    let cfg = parse_config_str(text, "test").unwrap();
    let report = run_experiment(&cfg);
    let manifest = emit_report(&report, dir).unwrap();
    (report, manifest)
}

fn snapshot(dir: &Path) -> BTreeMap<String, String> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let path = e.unwrap().path();
            let name = path.file_name().unwrap().to_string_lossy().into_owned();
            let mut text = std::fs::read_to_string(&path).unwrap();
            if name == "report.json" {
                let mut doc: Value = serde_json::from_str(&text).unwrap();
                doc.as_object_mut().unwrap().remove("timestamps");
                text = doc.to_string();
            }
            (name, text)
        })
        .collect()
}

#[test]
fn rerun_is_byte_identical_apart_from_timestamps() {
    let dir = tempfile::tempdir().unwrap();
    let text = config(
        r#"["SINGLE", "N_REFINEMENT", "HORIZON_CHECK", "PROPERTY_SUITE"]"#,
        "",
    );
    run(&text, dir.path());
    let first = snapshot(dir.path());
    run(&text, dir.path());
    assert_eq!(first, snapshot(dir.path()));
    assert!(first.len() > 2);
}

#[test]
fn single_writes_one_csv_and_one_report() {
    let dir = tempfile::tempdir().unwrap();
    let (report, manifest) = run(&config("\"SINGLE\"", ""), dir.path());
    assert!(report.all_pass, "{:?}", report.failed_audits());
    assert_eq!(manifest.files, vec!["single.csv", "report.json"]);
    assert_eq!(snapshot(dir.path()).len(), 2);
    let csv = std::fs::read_to_string(dir.path().join("single.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,kinetic,potential,script_E,E,dissipation_cum,work_cum,balance_residual"
    );
    assert_eq!(lines.count(), 26);
}

#[test]
fn empty_experiment_list_echoes_the_configuration() {
    let dir = tempfile::tempdir().unwrap();
    let text = config("[]", "");
    let (report, manifest) = run(&text, dir.path());
    assert!(report.experiments.is_empty());
    assert!(report.all_pass);
    assert_eq!(manifest.files, vec!["report.json"]);
    let doc: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap())
            .unwrap();
    assert_eq!(doc["schema_version"], SCHEMA_VERSION);
    assert_eq!(doc["config"]["problem"]["p"], 2.5);
    assert_eq!(doc["config"]["seed"], 42);
    assert!(doc["timestamps"].is_object());
}

#[test]
fn property_suite_passes_for_seed_42() {
    let cfg = experiments::default_suite_config(42, 16);
    let report = run_experiment(&cfg);
    let suite = &report.experiments[0];
    for anchor in ["monotonicity", "duality-identity", "homogeneity"] {
        let audit = suite.audits.iter().find(|a| a.anchor == anchor).unwrap();
        assert!(audit.pass, "{audit:?}");
    }
    assert!(suite.pass(), "{:?}", report.failed_audits());
}

#[test]
fn dt_refinement_recovers_second_order_energy_balance() {
    let dir = tempfile::tempdir().unwrap();
    let (report, manifest) = run(&config("\"DT_REFINEMENT\"", ""), dir.path());
    let exp = &report.experiments[0];
    let order = exp.metrics["balance_residual_order"];
    assert!((1.8..=2.2).contains(&order), "order {order}");
    assert!(exp.pass());
    assert!(manifest
        .files
        .contains(&"dt_refinement_orders.csv".to_string()));
}

#[test]
fn truncations_are_inactive_for_small_data() {
    let dir = tempfile::tempdir().unwrap();
    let text = config("\"TRUNCATION_COMPARE\"", "").replace(
        "\"seed\": 42,",
        "\"seed\": 42, \"study\": {\"radial_k\": 50.0, \"cutoff_n\": 8},",
    );
    let (report, _) = run(&text, dir.path());
    let exp = &report.experiments[0];
    assert_eq!(exp.metrics["radial_gap"], 0.0);
    assert_eq!(exp.metrics["cutoff_gap"], 0.0);
    assert_eq!(
        exp.audits
            .iter()
            .filter(|a| a.anchor.ends_with("truncation"))
            .count(),
        2
    );
    assert!(exp.pass());
}

#[test]
fn global_regime_stays_below_envelope() {
    let dir = tempfile::tempdir().unwrap();
    let text = config("\"GLOBAL_REGIME\"", "")
        .replace("\"r\": 1.5", "\"r\": 1.25")
        .replace("\"t_final\": 0.5", "\"t_final\": 2.0");
    let (report, _) = run(&text, dir.path());
    let exp = &report.experiments[0];
    assert!(exp.metrics["max_energy_minus_envelope"] <= 0.0);
    assert!(exp.pass(), "{:?}", report.failed_audits());
}

#[test]
fn failures_are_reported_not_raised() {
    let dir = tempfile::tempdir().unwrap();
    let text = config(
        "\"SINGLE\"",
        ", \"newton_tol\": 1e-30, \"newton_max_iter\": 2",
    );
    let (report, _) = run(&text, dir.path());
    assert!(!report.all_pass);
    let failed = report.failed_audits();
    assert!(failed.iter().any(|(_, a)| a.anchor == "run-termination"));
    assert_eq!(
        report.experiments[0].runs[0].termination,
        plapwave_core::Termination::NewtonFailure
    );
}

fn binary(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_plapwave"))
        .args(args)
        .output()
        .unwrap()
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, text: &str| {
        let path = dir.path().join(name);
        std::fs::write(&path, text).unwrap();
        path.to_string_lossy().into_owned()
    };
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();

    let good = write("good.json", &config("\"SINGLE\"", ""));
    assert_eq!(binary(&["run", &good, "--out", out]).status.code(), Some(0));

    let failing = write(
        "fail.json",
        &config(
            "\"SINGLE\"",
            ", \"newton_tol\": 1e-30, \"newton_max_iter\": 2",
        ),
    );
    assert_eq!(
        binary(&["run", &failing, "--out", out]).status.code(),
        Some(1)
    );

    let supercritical = write(
        "super.json",
        &config("\"SINGLE\"", "").replace("\"r\": 1.5", "\"r\": 9.0"),
    );
    let strict = binary(&["run", &supercritical, "--out", out]);
    assert_eq!(strict.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&strict.stderr).contains("source-growth-assumption"));
    let permissive = binary(&[
        "run",
        &supercritical,
        "--out",
        out,
        "--validation",
        "permissive",
    ]);
    assert_ne!(permissive.status.code(), Some(2));

    let broken = write(
        "broken.json",
        "{\n  \"experiment\": \"SINGLE\",\n  \"seed\": -1\n}",
    );
    let parse = binary(&["run", &broken]);
    assert_eq!(parse.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&parse.stderr).contains("broken.json:3:"));

    assert_eq!(
        binary(&["run", "/nonexistent/config.json"]).status.code(),
        Some(2)
    );
    assert_eq!(
        binary(&["check-params", "--p", "2.5", "--r", "1.25", "--global"])
            .status
            .code(),
        Some(0)
    );
    assert_eq!(
        binary(&["check-params", "--p", "3.5", "--r", "1.25"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn suite_command_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("suite");
    let status = binary(&[
        "suite",
        "--seed",
        "42",
        "--n",
        "16",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        status.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&status.stdout)
    );
    assert!(out.join("report.json").exists());
}
