use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const DIMER: &str = r#"{
    "model": {"kind": "hubbard_chain", "sites": 2, "t": 1.0, "u": 2.0},
    "sector": {"N": 2},
    "ensemble": {"kind": "canonical", "beta": 1.0},
    "probes": "one_body_full",
    "analysis": "kernel"
}"#;

fn run(dir: &Path, spec: &str, args: &[&str]) -> Output {
    let path = dir.join("spec.json");
    std::fs::write(&path, spec).unwrap();
    Command::new(env!("CARGO_BIN_EXE_ensemble-kernel"))
        .args(args)
        .arg("--spec")
        .arg(&path)
        .arg("--out")
        .arg(dir)
        .arg("--quiet")
        .output()
        .unwrap()
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn without_timings(mut v: Value) -> String {
    v.as_object_mut().unwrap().remove("timings");
    serde_json::to_string(&v).unwrap()
}

#[test]
fn kernel_on_the_dimer_matches_the_commutant() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), DIMER, &["kernel"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(dir.path());
    let kr = &r["kernel_report"];
    assert_eq!(kr["kernel_dim"], 4);
    assert_eq!(kr["commutant_dim"], 4);
    assert_eq!(kr["kernel_equals_commutant"], true);
    assert_eq!(kr["commutant_theorem"], true);
    assert_eq!(r["spectrum"]["dim"], 6);
}

#[test]
fn reports_are_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let spec = DIMER.replace("\"kernel\"", "\"verify\"");
    for d in [&a, &b] {
        let out = run(d.path(), &spec, &["run", "--seed", "7"]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let (ra, rb) = (report(a.path()), report(b.path()));
    assert!(ra["timings"].is_object());
    assert_eq!(without_timings(ra), without_timings(rb));
}

#[test]
fn report_survives_a_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    run(dir.path(), DIMER, &["kernel"]);
    let text = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
    let parsed: ensemble_kernel::cli::Report = serde_json::from_str(&text).unwrap();
    assert_eq!(ensemble_kernel::cli::report_json(&parsed), text);
}

#[test]
fn invalid_specs_exit_two_and_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (DIMER.replace("\"beta\": 1.0", "\"beta\": \"hot\""), "ensemble"),
        (DIMER.replace("\"u\": 2.0", "\"u\": 2.0, \"v\": 1"), "model"),
        (DIMER.replace("{\"N\": 2}", "{\"N\": 2, \"Sz\": 0.3}"), "sector"),
        (DIMER.replace("\"one_body_full\"", "\"everything\""), "probes"),
        ("{\"model\": ".to_string(), ""),
    ];
    for (spec, field) in cases {
        let out = run(dir.path(), &spec, &["run"]);
        assert_eq!(out.status.code(), Some(2), "{spec}");
        let err: Value = serde_json::from_str(String::from_utf8_lossy(&out.stderr).trim()).unwrap();
        assert_eq!(err["error"]["code"], 2);
        let named = err["error"]["field"].as_str().unwrap_or("");
        assert!(named.starts_with(field), "expected {field}, got {named}");
    }
}

#[test]
fn non_monotone_weights_are_rejected_with_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let spec = DIMER.replace(
        "{\"kind\": \"canonical\", \"beta\": 1.0}",
        "{\"kind\": \"custom\", \"weights\": [0.1, 0.3, 0.3, 0.3, 0.0, 0.0]}",
    );
    let out = run(dir.path(), &spec, &["kernel"]);
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_str(String::from_utf8_lossy(&out.stderr).trim()).unwrap();
    assert!(!err["error"]["pairs"].as_array().unwrap().is_empty());
}

#[test]
fn sweep_keeps_the_kernel_flat() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), DIMER, &["sweep-beta"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = report(dir.path())["sweep_beta"].as_array().unwrap().clone();
    assert!(rows.len() >= 4);
    for row in rows {
        assert_eq!(row["kernel_dim"], 4);
        assert_eq!(row["kernel_equals_commutant"], true);
    }
}

#[test]
fn overrides_must_match_the_ensemble() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), DIMER, &["kernel", "--mu", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(dir.path(), DIMER, &["kernel", "--beta", "3.0"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(dir.path())["kernel_report"]["kernel_dim"], 4);
}

#[test]
fn propagate_writes_a_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let spec = DIMER.replace(
        "\"kernel\"",
        r#"{"propagate": {"shape": {"shape": "sinusoid", "omega": 1.0}, "amplitude": 1e-4,
            "direction": [1,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0], "t_end": 2.0, "n_steps": 400}}"#,
    );
    let out = run(dir.path(), &spec, &["run"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.extension().is_some_and(|x| x == "csv"))
        .expect("trajectory written");
    let text = std::fs::read_to_string(csv).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("t,"));
    assert_eq!(lines.count(), 401);
}
