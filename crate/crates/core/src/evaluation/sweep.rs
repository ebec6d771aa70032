//! The full experiment: PROMETHEE labelings on each pair's F side, M.H.DIS
//! fitted on the complementary side per fold, evaluated on every year.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{confusion, generate_pairs, metrics, MetricsReport, PairCombination, INDICATORS};
use crate::dataset::catalog::{CORRELATED, RETAINED};
use crate::dataset::{prepared_matrix, Class, CriterionSpec, PanelDataset, PerformanceMatrix, TrimMode, YEARS};
use crate::error::{Error, Result};
use crate::mhdis::{fit, predict, MhdisConfig, StageDiagnostics};
use crate::promethee::{majority_vote, median_cut, run_promethee, PreferenceFunctionKind, PrometheeConfig, VoteStatus};
use crate::rng::derive_seed;
use crate::sampling::{kfold_split, FoldMode, FoldPlan, WeightMethod};
use crate::stats::pairwise_sum;

/// Source of the class labels M.H.DIS is trained to reproduce.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Labeling {
    /// The labels supplied with the dataset.
    Amadeus,
    Promethee(PreferenceFunctionKind),
}

impl Labeling {
    pub fn all() -> Vec<Labeling> {
        std::iter::once(Labeling::Amadeus).chain(PreferenceFunctionKind::ALL.map(Labeling::Promethee)).collect()
    }
}

impl fmt::Display for Labeling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Labeling::Amadeus => f.write_str("amadeus"),
            Labeling::Promethee(k) => write!(f, "{k}"),
        }
    }
}

impl From<Labeling> for String {
    fn from(l: Labeling) -> String {
        l.to_string()
    }
}

impl TryFrom<String> for Labeling {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl FromStr for Labeling {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s == "amadeus" {
            Ok(Labeling::Amadeus)
        } else {
            s.parse().map(Labeling::Promethee)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    fn label(self) -> &'static str {
        match self {
            Split::Train => "TRAINING SET",
            Split::Test => "TEST SET",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub seed: u64,
    pub folds: usize,
    pub fold_mode: FoldMode,
    pub scenarios: usize,
    pub weights: WeightMethod,
    pub trim_mode: TrimMode,
    pub mhdis: MhdisConfig,
    /// The six criteria to split; the built-in retained six when `None`.
    pub criteria: Option<Vec<String>>,
    pub correlated: Vec<(String, String)>,
    /// Refit M.H.DIS on each year's training data instead of reusing the
    /// year-1 model.
    pub refit_per_year: bool,
    /// Worker threads; 0 uses all available cores.
    pub workers: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            folds: 5,
            fold_mode: FoldMode::Partition,
            scenarios: 10_000,
            weights: WeightMethod::HitAndRun,
            trim_mode: TrimMode::StandardTukey,
            mhdis: MhdisConfig::default(),
            criteria: None,
            correlated: CORRELATED.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
            refit_per_year: false,
            workers: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellKey {
    pub pair: usize,
    pub labeling: Labeling,
    pub fold: usize,
}

/// Metrics of one fitted model on one year and split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    #[serde(flatten)]
    pub key: CellKey,
    pub year: u8,
    pub split: Split,
    pub n: usize,
    pub metrics: Option<MetricsReport>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    #[serde(flatten)]
    pub key: CellKey,
    pub diagnostics: Vec<StageDiagnostics>,
    pub error: Option<String>,
}

/// Fold-averaged indicators of one (pair, labeling, year, split).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AveragedRow {
    pub pair: usize,
    pub labeling: Labeling,
    pub year: u8,
    pub split: Split,
    /// Folds that produced metrics.
    pub folds: usize,
    pub sens: Option<f64>,
    pub spec: Option<f64>,
    pub aca: Option<f64>,
    pub oca: Option<f64>,
    pub auroc: Option<f64>,
    pub gini: Option<f64>,
}

impl AveragedRow {
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

/// External-labeling value against the range over preference functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangeRow {
    pub pair: usize,
    pub year: u8,
    pub split: Split,
    pub indicator: String,
    pub amadeus: Option<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
}

impl RangeRow {
    pub fn amadeus_within(&self) -> Option<bool> {
        let (a, lo, hi) = (self.amadeus?, self.min?, self.max?);
        Some(lo <= a && a <= hi)
    }
}

/// Frequencies of the majority-vote labels of one pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MajorityRow {
    pub pair: usize,
    pub c1: usize,
    pub c2: usize,
    pub undetermined: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub config: SweepConfig,
    pub criteria: Vec<String>,
    pub companies: usize,
    pub pairs: Vec<PairCombination>,
    pub folds: FoldPlan,
    pub fits: Vec<FitRecord>,
    pub cells: Vec<CellResult>,
    pub averages: Vec<AveragedRow>,
    pub ranges: Vec<RangeRow>,
    pub majority: Vec<MajorityRow>,
    pub warnings: Vec<String>,
}

/// Year matrices of the chosen criteria: complete companies, aligned and
/// trimmed per year.
fn year_matrices(ds: &PanelDataset, ids: &[String], mode: TrimMode) -> Result<Vec<PerformanceMatrix>> {
    YEARS.iter().map(|&y| prepared_matrix(ds, y, ids, mode)).collect()
}

/// Rows of `m` for `companies` (those present), relabeled from `labels`.
fn slice(
    m: &PerformanceMatrix,
    companies: &[String],
    labels: &HashMap<String, Class>,
    criteria: &[String],
) -> Result<PerformanceMatrix> {
    let idx: Vec<usize> = companies.iter().filter_map(|c| m.row_of(c)).collect();
    let sub = m.select_rows(&idx).select_criteria(criteria)?;
    let l = sub.company_ids.iter().map(|c| labels[c]).collect();
    sub.with_labels(l)
}

struct Context<'a> {
    cfg: &'a SweepConfig,
    years: Vec<PerformanceMatrix>,
    pairs: Vec<PairCombination>,
    folds: FoldPlan,
    /// labels[pair][labeling index] by company.
    labels: Vec<Vec<HashMap<String, Class>>>,
    labelings: Vec<Labeling>,
}

impl Context<'_> {
    fn run_cell(&self, key: CellKey) -> (FitRecord, Vec<CellResult>) {
        let pair = &self.pairs[key.pair - 1];
        let li = self.labelings.iter().position(|l| *l == key.labeling).expect("labeling");
        let labels = &self.labels[key.pair - 1][li];
        let fold = &self.folds.folds[key.fold - 1];
        let crit = &pair.f_complement;
        let fitted = slice(&self.years[0], &fold.train, labels, crit).and_then(|train| fit(&train, &self.cfg.mhdis));
        let mut record = FitRecord { key, diagnostics: Vec::new(), error: None };
        let mut cells = Vec::new();
        let year1 = match fitted {
            Ok(m) => {
                record.diagnostics = m.stages.iter().map(|s| s.diagnostics.clone()).collect();
                Some(m)
            }
            Err(e) => {
                record.error = Some(e.to_string());
                None
            }
        };
        for (yi, m) in self.years.iter().enumerate() {
            let refit = if self.cfg.refit_per_year && yi > 0 {
                Some(slice(m, &fold.train, labels, crit).and_then(|t| fit(&t, &self.cfg.mhdis)))
            } else {
                None
            };
            for (split, ids) in [(Split::Train, &fold.train), (Split::Test, &fold.test)] {
                let mut cell = CellResult { key, year: m.year, split, n: 0, metrics: None, error: None };
                let model = match (&refit, &year1) {
                    (Some(Ok(r)), _) => Ok(r),
                    (Some(Err(e)), _) => Err(e.to_string()),
                    (None, Some(r)) => Ok(r),
                    (None, None) => Err(record.error.clone().unwrap_or_default()),
                };
                let outcome = model.map_err(Error::Invalid).and_then(|model| {
                    let data = slice(m, ids, labels, crit)?;
                    let predicted = predict(model, &data)?;
                    Ok((data.n_rows(), metrics(&confusion(&data.labels, &predicted)?)?))
                });
                match outcome {
                    Ok((n, r)) => {
                        cell.n = n;
                        cell.metrics = Some(r);
                    }
                    Err(e) => cell.error = Some(e.to_string()),
                }
                cells.push(cell);
            }
        }
        (record, cells)
    }
}

fn map_cells<F>(keys: &[CellKey], workers: usize, f: F) -> Result<Vec<(FitRecord, Vec<CellResult>)>>
where
    F: Fn(CellKey) -> (FitRecord, Vec<CellResult>) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::Invalid(format!("thread pool: {e}")))?;
        Ok(pool.install(|| keys.par_iter().map(|&k| f(k)).collect()))
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = workers;
        Ok(keys.iter().map(|&k| f(k)).collect())
    }
}

fn mean_of(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.flatten().collect();
    (!v.is_empty()).then(|| pairwise_sum(&v) / v.len() as f64)
}

fn averages(cells: &[CellResult], pairs: usize, labelings: &[Labeling]) -> Vec<AveragedRow> {
    let mut groups: HashMap<(usize, Labeling, u8, Split), Vec<&MetricsReport>> = HashMap::new();
    for c in cells {
        if let Some(m) = &c.metrics {
            groups.entry((c.key.pair, c.key.labeling, c.year, c.split)).or_default().push(m);
        }
    }
    let mut out = Vec::new();
    for pair in 1..=pairs {
        for &labeling in labelings {
            for year in YEARS {
                for split in [Split::Train, Split::Test] {
                    let ms = groups.get(&(pair, labeling, year, split)).cloned().unwrap_or_default();
                    let avg = |f: fn(&MetricsReport) -> Option<f64>| mean_of(ms.iter().map(|m| f(m)));
                    out.push(AveragedRow {
                        pair,
                        labeling,
                        year,
                        split,
                        folds: ms.len(),
                        sens: avg(|m| m.sens),
                        spec: avg(|m| m.spec),
                        aca: avg(|m| m.aca),
                        oca: avg(|m| m.oca),
                        auroc: avg(|m| m.auroc),
                        gini: avg(|m| m.gini),
                    });
                }
            }
        }
    }
    out
}

fn ranges(avg: &[AveragedRow], pairs: usize) -> Vec<RangeRow> {
    let mut out = Vec::new();
    for pair in 1..=pairs {
        for year in YEARS {
            for split in [Split::Train, Split::Test] {
                let rows: Vec<&AveragedRow> =
                    avg.iter().filter(|r| r.pair == pair && r.year == year && r.split == split).collect();
                for ind in INDICATORS {
                    let amadeus = rows.iter().find(|r| r.labeling == Labeling::Amadeus).and_then(|r| r.get(ind));
                    let kinds: Vec<f64> =
                        rows.iter().filter(|r| r.labeling != Labeling::Amadeus).filter_map(|r| r.get(ind)).collect();
                    out.push(RangeRow {
                        pair,
                        year,
                        split,
                        indicator: ind.to_string(),
                        amadeus,
                        min: kinds.iter().copied().reduce(f64::min),
                        max: kinds.iter().copied().reduce(f64::max),
                    });
                }
            }
        }
    }
    out
}

/// Runs the whole experiment. Failures of single fits or evaluations are
/// recorded in their cells; only setup failures abort.
pub fn run_sweep(ds: &PanelDataset, cfg: &SweepConfig) -> Result<SweepResult> {
    let ids: Vec<String> = match &cfg.criteria {
        Some(c) => c.clone(),
        None => RETAINED.iter().map(|s| s.to_string()).collect(),
    };
    let specs: Vec<CriterionSpec> = ids.iter().map(|id| ds.spec(id).cloned()).collect::<Result<_>>()?;
    let pairs = generate_pairs(&specs, &cfg.correlated)?;
    if pairs.is_empty() {
        return Err(Error::Invalid("no admissible criterion pairs".into()));
    }
    let years = year_matrices(ds, &ids, cfg.trim_mode)?;
    let m1 = &years[0];
    let mut warnings = Vec::new();
    for m in &years[1..] {
        let missing = m1.company_ids.iter().filter(|c| m.row_of(c).is_none()).count();
        if missing > 0 {
            warnings.push(format!("year {}: {missing} companies lack complete data", m.year));
        }
    }
    let folds = kfold_split(&m1.company_ids, &m1.labels, cfg.folds, cfg.fold_mode, derive_seed(cfg.seed, "folds"))?;
    let pcfg =
        PrometheeConfig { scenarios: cfg.scenarios, seed: derive_seed(cfg.seed, "promethee"), weights: cfg.weights };
    let labelings = Labeling::all();
    let mut labels = Vec::new();
    let mut majority = Vec::new();
    for pair in &pairs {
        let mut per_kind = Vec::new();
        for kind in PreferenceFunctionKind::ALL {
            let t = run_promethee(m1, &pair.f, kind, &pcfg)?;
            warnings.extend(t.warnings.iter().map(|w| format!("pair {} {kind}: {w}", pair.index)));
            per_kind.push(median_cut(&t));
        }
        let vote = majority_vote(&per_kind)?;
        let count = |s: VoteStatus| vote.status.iter().filter(|&&v| v == s).count();
        majority.push(MajorityRow {
            pair: pair.index,
            c1: count(VoteStatus::C1),
            c2: count(VoteStatus::C2),
            undetermined: count(VoteStatus::Undetermined),
            total: vote.status.len(),
        });
        let mut by_labeling = vec![m1.company_ids.iter().cloned().zip(m1.labels.iter().copied()).collect()];
        for c in &per_kind {
            by_labeling.push(c.company_ids.iter().cloned().zip(c.classes.iter().copied()).collect());
        }
        labels.push(by_labeling);
    }
    let ctx = Context { cfg, years, pairs, folds, labels, labelings };
    let mut keys = Vec::new();
    for pair in 1..=ctx.pairs.len() {
        for &labeling in &ctx.labelings {
            for fold in 1..=ctx.folds.folds.len() {
                keys.push(CellKey { pair, labeling, fold });
            }
        }
    }
    let outcomes = map_cells(&keys, cfg.workers, |k| ctx.run_cell(k))?;
    let mut fits = Vec::with_capacity(outcomes.len());
    let mut cells = Vec::new();
    for (f, c) in outcomes {
        fits.push(f);
        cells.extend(c);
    }
    let averages = averages(&cells, ctx.pairs.len(), &ctx.labelings);
    let ranges = ranges(&averages, ctx.pairs.len());
    Ok(SweepResult {
        config: cfg.clone(),
        criteria: ids,
        companies: ctx.years[0].n_rows(),
        pairs: ctx.pairs,
        folds: ctx.folds,
        fits,
        cells,
        averages,
        ranges,
        majority,
        warnings,
    })
}

fn fmt2(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.2}")).unwrap_or_default()
}

fn csv_io(e: std::io::Error) -> Error {
    Error::Io(e.to_string())
}

impl SweepResult {
    pub fn average(&self, pair: usize, labeling: Labeling, year: u8, split: Split) -> Option<&AveragedRow> {
        self.averages.iter().find(|r| r.pair == pair && r.labeling == labeling && r.year == year && r.split == split)
    }

    /// Mean over pairs and labelings of the fold-averaged `indicator`.
    pub fn headline(&self, indicator: &str, year: u8, split: Split) -> Option<f64> {
        mean_of(self.averages.iter().filter(|r| r.year == year && r.split == split).map(|r| r.get(indicator)))
    }

    pub fn failed_fits(&self) -> usize {
        self.fits.iter().filter(|f| f.error.is_some()).count()
    }

    /// One year of fold-averaged indicators, one column per labeling; kinds
    /// below the external labeling are listed in the last column.
    pub fn write_table4_csv<W: Write>(&self, year: u8, sink: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        let kinds = PreferenceFunctionKind::ALL;
        let mut header = vec![
            "pair".to_string(),
            "f_h".into(),
            "f_h_complement".into(),
            "split".into(),
            "indicator".into(),
            "amadeus".into(),
        ];
        header.extend(kinds.iter().map(|k| k.to_string()));
        header.push("below_amadeus".into());
        w.write_record(&header)?;
        for pair in &self.pairs {
            for split in [Split::Train, Split::Test] {
                for ind in INDICATORS {
                    let get = |l: Labeling| self.average(pair.index, l, year, split).and_then(|r| r.get(ind));
                    let amadeus = get(Labeling::Amadeus);
                    let mut rec = vec![
                        format!("P{}", pair.index),
                        pair.f.join(" "),
                        pair.f_complement.join(" "),
                        split.label().to_string(),
                        ind.to_string(),
                        fmt2(amadeus),
                    ];
                    let mut below = Vec::new();
                    for k in kinds {
                        let v = get(Labeling::Promethee(k));
                        if let (Some(a), Some(x)) = (amadeus, v) {
                            if x < a {
                                below.push(k.to_string());
                            }
                        }
                        rec.push(fmt2(v));
                    }
                    rec.push(below.join(";"));
                    w.write_record(&rec)?;
                }
            }
        }
        w.flush().map_err(csv_io)
    }

    /// ACA and OCA of the external labeling next to the min and max over
    /// preference functions, for every year.
    pub fn write_table12_csv<W: Write>(&self, sink: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        let mut header = vec!["pair".to_string(), "split".into(), "indicator".into()];
        for y in YEARS {
            header.extend([format!("y{y}_amadeus"), format!("y{y}_min"), format!("y{y}_max")]);
        }
        w.write_record(&header)?;
        for pair in &self.pairs {
            for split in [Split::Train, Split::Test] {
                for ind in ["ACA", "OCA"] {
                    let mut rec = vec![format!("P{}", pair.index), split.label().to_string(), ind.to_string()];
                    for y in YEARS {
                        let r = self
                            .ranges
                            .iter()
                            .find(|r| r.pair == pair.index && r.year == y && r.split == split && r.indicator == ind);
                        rec.push(fmt2(r.and_then(|r| r.amadeus)));
                        rec.push(fmt2(r.and_then(|r| r.min)));
                        rec.push(fmt2(r.and_then(|r| r.max)));
                    }
                    w.write_record(&rec)?;
                }
            }
        }
        w.flush().map_err(csv_io)
    }

    /// Majority-vote class frequencies per pair.
    pub fn write_table10_csv<W: Write>(&self, sink: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(["pair", "class", "companies", "relative_pct", "cumulative_pct"])?;
        for m in &self.majority {
            let pct = |n: usize| 100.0 * n as f64 / m.total as f64;
            let p = format!("P{}", m.pair);
            w.write_record([p.as_str(), "1", &m.c1.to_string(), &format!("{:.2}", pct(m.c1)), ""])?;
            w.write_record([
                p.as_str(),
                "2",
                &m.c2.to_string(),
                &format!("{:.2}", pct(m.c2)),
                &format!("{:.2}", pct(m.c1)),
            ])?;
            w.write_record([
                p.as_str(),
                "undetermined",
                &m.undetermined.to_string(),
                &format!("{:.2}", pct(m.undetermined)),
                &format!("{:.2}", pct(m.c1 + m.c2)),
            ])?;
            w.write_record([p.as_str(), "total", &m.total.to_string(), "100.00", "100.00"])?;
        }
        w.flush().map_err(csv_io)
    }
}
