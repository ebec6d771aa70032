use mhdis_web::{fit_json, panel_csv, promethee_json};
use serde_json::Value;

#[test]
fn panel_round_trips_through_promethee() {
    let csv = panel_csv(12, 1.0, 3).unwrap();
    let v: Value =
        serde_json::from_str(&promethee_json(&csv, "ROA, TD_TA,CA_TS", "linear", 1, 200, 3).unwrap()).unwrap();
    let classes = v["classification"]["classes"].as_array().unwrap();
    assert_eq!(classes.len(), v["flows"]["company_ids"].as_array().unwrap().len());
    let c1 = classes.iter().filter(|c| *c == "C1").count();
    assert_eq!(c1 * 2, classes.len());
    let total: f64 = v["flows"]["flows"].as_array().unwrap().iter().map(|f| f["phi"].as_f64().unwrap()).sum();
    assert!(total.abs() < 1e-9);
}

#[test]
fn fit_reports_both_splits() {
    let csv = panel_csv(20, 2.0, 1).unwrap();
    let v: Value = serde_json::from_str(&fit_json(&csv, "", 1, 1).unwrap()).unwrap();
    assert_eq!(v["model"]["criteria"].as_array().unwrap().len(), 6);
    let n = |k: &str| {
        let c = &v[k]["confusion"];
        ["tp", "fp", "fn", "tn"].iter().map(|f| c[f].as_u64().unwrap()).sum::<u64>()
    };
    assert_eq!(n("train") + n("test"), 40);
    assert!(v["train"]["oca"].as_f64().unwrap() >= 50.0);
}

#[test]
fn errors_come_back_as_text() {
    assert!(promethee_json("not,a,panel\n", "", "usual", 1, 10, 0).is_err());
    let csv = panel_csv(12, 1.0, 3).unwrap();
    let e = promethee_json(&csv, "ROA", "sideways", 1, 10, 0).unwrap_err();
    assert!(e.contains("sideways"), "{e}");
}
