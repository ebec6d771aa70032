//! Classification metrics, criterion pair generation, the synthetic data
//! generators and the cross-validated experiment sweep.

mod pairs;
mod sweep;
mod synthetic;

use serde::{Deserialize, Serialize};

use crate::dataset::Class;
use crate::error::{Error, Result};

pub use pairs::{generate_pairs, PairCombination};
pub use sweep::{
    run_sweep, AveragedRow, CellKey, CellResult, Labeling, MajorityRow, RangeRow, Split, SweepConfig, SweepResult,
};
pub use synthetic::{gen_synthetic, screening_fixture, SyntheticConfig, FIXTURE_SEED, FIXTURE_SEPARATION};

/// Two-class confusion counts. Orientation: `fp` counts true C1 predicted C2,
/// `fn_` true C2 predicted C1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

pub fn confusion(truth: &[Class], predicted: &[Class]) -> Result<ConfusionMatrix> {
    if truth.len() != predicted.len() {
        return Err(Error::LengthMismatch(truth.len(), predicted.len()));
    }
    let mut c = ConfusionMatrix::default();
    for (t, p) in truth.iter().zip(predicted) {
        match (t, p) {
            (Class::C1, Class::C1) => c.tp += 1,
            (Class::C1, Class::C2) => c.fp += 1,
            (Class::C2, Class::C1) => c.fn_ += 1,
            (Class::C2, Class::C2) => c.tn += 1,
        }
    }
    Ok(c)
}

/// The six indicators in percent; `None` where a denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub sens: Option<f64>,
    pub spec: Option<f64>,
    pub aca: Option<f64>,
    pub oca: Option<f64>,
    pub auroc: Option<f64>,
    pub gini: Option<f64>,
    pub confusion: ConfusionMatrix,
}

/// Indicator names in reporting order.
pub const INDICATORS: [&str; 6] = ["SENS", "SPEC", "ACA", "OCA", "AUROC", "GINI"];

impl MetricsReport {
    pub fn get(&self, indicator: &str) -> Option<f64> {
        match indicator {
            "SENS" => self.sens,
            "SPEC" => self.spec,
            "ACA" => self.aca,
            "OCA" => self.oca,
            "AUROC" => self.auroc,
            "GINI" => self.gini,
            _ => None,
        }
    }
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| 100.0 * num as f64 / den as f64)
}

pub fn metrics(c: &ConfusionMatrix) -> Result<MetricsReport> {
    if c.total() == 0 {
        return Err(Error::EmptyConfusion);
    }
    let sens = ratio(c.tp, c.tp + c.fp);
    let spec = ratio(c.tn, c.tn + c.fn_);
    let aca = sens.zip(spec).map(|(a, b)| (a + b) / 2.0);
    let oca = ratio(c.tp + c.tn, c.total());
    let auroc = ratio(c.tp, c.tp + c.fn_).zip(ratio(c.tn, c.tn + c.fp)).map(|(a, b)| (a + b) / 2.0);
    let gini = auroc.map(|a| 2.0 * a - 100.0);
    Ok(MetricsReport { sens, spec, aca, oca, auroc, gini, confusion: *c })
}
