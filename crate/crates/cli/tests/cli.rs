use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn mhdis(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mhdis")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = mhdis(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn error_code(out: &Output) -> String {
    let v: Value = serde_json::from_slice(&out.stderr).expect("stderr is one JSON object");
    v["error"]["code"].as_str().unwrap().to_string()
}

fn panel(dir: &Path) -> String {
    let p = dir.join("panel.csv").display().to_string();
    ok(&["--seed", "5", "gen", "--n", "15", "--sep", "2", "--output", &p]);
    p
}

#[test]
fn gen_is_reproducible() {
    let a = ok(&["--seed", "9", "gen", "--n", "10"]);
    let b = ok(&["--seed", "9", "gen", "--n", "10"]);
    assert_eq!(a, b);
    assert!(a.starts_with("company_id,label,size_stratum,year_offset,"));
    // 20 companies over 4 years plus the header
    assert_eq!(a.lines().count(), 81);
}

#[test]
fn screen_reports_stage_survivors() {
    let dir = tempfile::tempdir().unwrap();
    let data = panel(dir.path());
    let v: Value = serde_json::from_str(&ok(&["screen", "--data", &data])).unwrap();
    assert!(v["stage1_survivors"].is_array());
    assert!(v["stage2_survivors"].is_array());
}

#[test]
fn promethee_labels_feed_fit_and_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let data = panel(dir.path());
    let flows = dir.path().join("flows.csv").display().to_string();
    let model = dir.path().join("model.json").display().to_string();
    ok(&[
        "--scenarios",
        "100",
        "promethee",
        "--data",
        &data,
        "--criteria",
        "ROA,TD_TA,CA_TS",
        "--kind",
        "v_shape",
        "--output",
        &flows,
    ]);
    let csv = std::fs::read_to_string(&flows).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 30);
    let c1 = rows.iter().filter(|r| r.ends_with(",C1")).count();
    assert_eq!(c1, 15);

    ok(&["fit", "--data", &data, "--criteria", "EBITDA_TA,EQ_RATIO,CA_TA", "--labels", &flows, "--output", &model]);
    let m: Value = serde_json::from_str(&std::fs::read_to_string(&model).unwrap()).unwrap();
    assert_eq!(m["criteria"], serde_json::json!(["EBITDA_TA", "EQ_RATIO", "CA_TA"]));

    let report: Value = serde_json::from_str(&ok(&["evaluate", "--model", &model, "--data", &data])).unwrap();
    let c = &report["confusion"];
    let total: u64 = ["tp", "fp", "fn", "tn"].iter().map(|k| c[k].as_u64().unwrap()).sum();
    assert_eq!(total, 30);
}

#[test]
fn pairs_default_and_custom() {
    let v: Value = serde_json::from_str(&ok(&["pairs"])).unwrap();
    assert!(!v.as_array().unwrap().is_empty());
    let none: Value = serde_json::from_str(&ok(&["pairs", "--correlated", "ROA:EBITDA_TA"])).unwrap();
    assert!(none.as_array().unwrap().len() >= v.as_array().unwrap().len());
}

#[test]
fn synthetic_sweep_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep");
    let out_s = out.display().to_string();
    ok(&["--scenarios", "50", "--folds", "3", "sweep", "--synthetic", "10,2", "--out-dir", &out_s, "--workers", "1"]);
    for f in ["sweep.json", "table10.csv", "table12.csv", "table4_year1.csv", "table4_year4.csv"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let v: Value = serde_json::from_str(&std::fs::read_to_string(out.join("sweep.json")).unwrap()).unwrap();
    assert!(v.is_object());
}

#[test]
fn errors_are_json_on_stderr() {
    let out = mhdis(&["screen", "--data", "/definitely/missing.csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_code(&out), "io");

    let out = mhdis(&["--trim-mode", "nope", "pairs"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_code(&out), "usage");

    let out = mhdis(&["sweep", "--synthetic", "ten"]);
    assert!(!out.status.success());
    assert_eq!(error_code(&out), "invalid_input");

    let dir = tempfile::tempdir().unwrap();
    let data = panel(dir.path());
    let out = mhdis(&["promethee", "--data", &data, "--criteria", "NOT_A_RATIO"]);
    assert!(!out.status.success());
    assert_eq!(error_code(&out), "unknown_criterion");
}

#[test]
fn help_exits_zero() {
    let out = mhdis(&["--help"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("sweep"));
}
