//! Browser bindings. Each operation has a plain Rust form returning JSON (or
//! CSV) so it can be tested natively; the `#[wasm_bindgen]` wrappers only turn
//! errors into JS exceptions.

use serde_json::json;
use wasm_bindgen::prelude::*;

use mhdis_core::dataset::catalog::ratio_catalog;
use mhdis_core::dataset::{load_dataset, prepared_matrix, write_dataset, PanelDataset, TrimMode};
use mhdis_core::evaluation::{confusion, gen_synthetic, metrics, SyntheticConfig};
use mhdis_core::mhdis::{fit, predict, MhdisConfig};
use mhdis_core::promethee::{median_cut, run_promethee, PreferenceFunctionKind, PrometheeConfig};
use mhdis_core::sampling::{kfold_split, FoldMode};

type Result<T> = std::result::Result<T, String>;

fn text<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn parse_panel(csv: &str) -> Result<PanelDataset> {
    load_dataset(csv.as_bytes(), &ratio_catalog()).map_err(text)
}

fn criteria_list(ds: &PanelDataset, criteria: &str) -> Vec<String> {
    let list: Vec<String> = criteria.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect();
    if list.is_empty() {
        ds.criterion_ids()
    } else {
        list
    }
}

/// Synthetic panel CSV with `n` companies per class.
pub fn panel_csv(n: usize, separation: f64, seed: u64) -> Result<String> {
    let ds = gen_synthetic(&SyntheticConfig::new(n, separation, seed)).map_err(text)?;
    let mut out = Vec::new();
    write_dataset(&ds, &mut out).map_err(text)?;
    String::from_utf8(out).map_err(text)
}

/// PROMETHEE II flows averaged over random weights, with median-cut classes.
pub fn promethee_json(csv: &str, criteria: &str, kind: &str, year: u8, scenarios: usize, seed: u64) -> Result<String> {
    let ds = parse_panel(csv)?;
    let criteria = criteria_list(&ds, criteria);
    let kind: PreferenceFunctionKind = kind.parse().map_err(text)?;
    let m = prepared_matrix(&ds, year, &criteria, TrimMode::StandardTukey).map_err(text)?;
    let cfg = PrometheeConfig { scenarios, seed, ..Default::default() };
    let table = run_promethee(&m, &criteria, kind, &cfg).map_err(text)?;
    let classes = median_cut(&table);
    serde_json::to_string(&json!({ "flows": table, "classification": classes })).map_err(text)
}

/// Fits M.H.DIS on all folds but one and scores the held-out fold.
pub fn fit_json(csv: &str, criteria: &str, year: u8, seed: u64) -> Result<String> {
    let ds = parse_panel(csv)?;
    let criteria = criteria_list(&ds, criteria);
    let m = prepared_matrix(&ds, year, &criteria, TrimMode::StandardTukey).map_err(text)?;
    let plan = kfold_split(&m.company_ids, &m.labels, 5, FoldMode::Partition, seed).map_err(text)?;
    let (train, test) = plan.indices(&m.company_ids).swap_remove(0);
    let (train, test) = (m.select_rows(&train), m.select_rows(&test));
    let model = fit(&train, &MhdisConfig::default()).map_err(text)?;
    let score = |part: &mhdis_core::dataset::PerformanceMatrix| -> Result<_> {
        let predicted = predict(&model, part).map_err(text)?;
        metrics(&confusion(&part.labels, &predicted).map_err(text)?).map_err(text)
    };
    serde_json::to_string(&json!({
        "model": model,
        "train": score(&train)?,
        "test": score(&test)?,
    }))
    .map_err(text)
}

#[wasm_bindgen(js_name = panelCsv)]
pub fn panel_csv_js(n: usize, separation: f64, seed: u32) -> std::result::Result<String, JsError> {
    panel_csv(n, separation, seed.into()).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = promethee)]
pub fn promethee_js(
    csv: &str,
    criteria: &str,
    kind: &str,
    year: u8,
    scenarios: usize,
    seed: u32,
) -> std::result::Result<String, JsError> {
    promethee_json(csv, criteria, kind, year, scenarios, seed.into()).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = fitModel)]
pub fn fit_js(csv: &str, criteria: &str, year: u8, seed: u32) -> std::result::Result<String, JsError> {
    fit_json(csv, criteria, year, seed.into()).map_err(|e| JsError::new(&e))
}
