//! Three-stage predictor screening: information value, Welch t-test and
//! pairwise correlation.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::dataset::{Class, PanelDataset, YEARS};
use crate::error::{Error, Result};
use crate::stats::{mean, pairwise_sum, quantile_sorted, sorted, variance};

/// Weight of evidence `ln((p_active + eps) / (p_inactive + eps))`.
pub fn woe(p_active: f64, p_inactive: f64, eps: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p_active) || !(0.0..=1.0).contains(&p_inactive) {
        return Err(Error::Invalid(format!("proportions must lie in [0, 1], got {p_active} and {p_inactive}")));
    }
    if eps == 0.0 && (p_active == 0.0 || p_inactive == 0.0) {
        return Err(Error::UndefinedWoe);
    }
    Ok(((p_active + eps) / (p_inactive + eps)).ln())
}

/// IV from per-bin within-class proportions.
pub fn iv_from_proportions(active: &[f64], inactive: &[f64], eps: f64) -> Result<f64> {
    if active.len() != inactive.len() {
        return Err(Error::LengthMismatch(active.len(), inactive.len()));
    }
    let terms: Vec<f64> = active
        .iter()
        .zip(inactive)
        .map(|(&a, &i)| {
            if a == i {
                return Ok(0.0);
            }
            Ok((a - i) * woe(a, i, eps)?)
        })
        .collect::<Result<_>>()?;
    // Each term is nonnegative in exact arithmetic.
    Ok(pairwise_sum(&terms).max(0.0))
}

/// Bin index of each value for `bins` pooled quantile bins; a value equal to
/// an edge falls into the lower bin.
pub fn quantile_bins(values: &[f64], bins: usize) -> Vec<usize> {
    let s = sorted(values);
    let edges: Vec<f64> = (1..bins).map(|k| quantile_sorted(&s, k as f64 / bins as f64)).collect();
    values.iter().map(|&v| edges.partition_point(|&e| e < v)).collect()
}

/// Information value of one criterion.
pub fn information_value(values: &[f64], labels: &[Class], bins: usize, eps: f64) -> Result<f64> {
    if values.len() != labels.len() {
        return Err(Error::LengthMismatch(values.len(), labels.len()));
    }
    if bins < 2 {
        return Err(Error::Invalid("information value needs at least 2 bins".into()));
    }
    let n1 = labels.iter().filter(|&&l| l == Class::C1).count();
    let n2 = labels.len() - n1;
    if n1 == 0 || n2 == 0 {
        return Err(Error::SingleClass);
    }
    let mut c1 = vec![0usize; bins];
    let mut c2 = vec![0usize; bins];
    for (b, &l) in quantile_bins(values, bins).into_iter().zip(labels) {
        match l {
            Class::C1 => c1[b] += 1,
            Class::C2 => c2[b] += 1,
        }
    }
    let p1: Vec<f64> = c1.iter().map(|&c| c as f64 / n1 as f64).collect();
    let p2: Vec<f64> = c2.iter().map(|&c| c as f64 / n2 as f64).collect();
    iv_from_proportions(&p1, &p2, eps)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Grade {
    Useless,
    Weak,
    Medium,
    Strong,
    Suspicious,
}

/// Lower edges of the weak, medium, strong and suspicious grades.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IvThresholds {
    pub weak: f64,
    pub medium: f64,
    pub strong: f64,
    pub suspicious: f64,
}

impl Default for IvThresholds {
    fn default() -> Self {
        Self { weak: 0.02, medium: 0.1, strong: 0.3, suspicious: 0.5 }
    }
}

impl IvThresholds {
    pub fn grade(&self, iv: f64) -> Grade {
        if iv >= self.suspicious {
            Grade::Suspicious
        } else if iv >= self.strong {
            Grade::Strong
        } else if iv >= self.medium {
            Grade::Medium
        } else if iv >= self.weak {
            Grade::Weak
        } else {
            Grade::Useless
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t_statistic: f64,
    pub df: f64,
    pub p_value: f64,
}

/// Welch two-sample t-test with a two-sided p-value.
pub fn t_test(a: &[f64], b: &[f64]) -> Result<TTest> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::DegenerateGroups("each group needs at least 2 observations".into()));
    }
    // Sorting first makes the sums independent of input order.
    let (a, b) = (sorted(a), sorted(b));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (va, vb) = (variance(&a) / na, variance(&b) / nb);
    let se2 = va + vb;
    if se2 <= 0.0 {
        return Err(Error::DegenerateGroups("both groups have zero variance".into()));
    }
    let t = (mean(&a) - mean(&b)) / se2.sqrt();
    let df = se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::DegenerateGroups(e.to_string()))?;
    let p = (2.0 * dist.cdf(-t.abs())).clamp(0.0, 1.0);
    Ok(TTest { t_statistic: t, df, p_value: p })
}

/// Sample Pearson correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(Error::Invalid("correlation needs at least 2 observations".into()));
    }
    let mut pairs: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.total_cmp(&q.1)));
    let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let (mx, my) = (mean(&xs), mean(&ys));
    let sxy: Vec<f64> = pairs.iter().map(|(a, b)| (a - mx) * (b - my)).collect();
    let sxx: Vec<f64> = xs.iter().map(|a| (a - mx) * (a - mx)).collect();
    let syy: Vec<f64> = ys.iter().map(|b| (b - my) * (b - my)).collect();
    let (sxx, syy) = (pairwise_sum(&sxx), pairwise_sum(&syy));
    if sxx <= 0.0 || syy <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok((pairwise_sum(&sxy) / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreeningConfig {
    pub bins: usize,
    pub eps: f64,
    pub thresholds: IvThresholds,
    /// Stage 1 removes a criterion whose IV is below this cut...
    pub iv_cut: f64,
    /// ...in at least this many years.
    pub iv_years: usize,
    pub alpha: f64,
    /// Stage 2 removes a criterion not significant in at least this many years.
    pub p_years: usize,
    pub corr_cut: f64,
    pub min_links: usize,
    pub years: Vec<u8>,
}

impl Default for ScreeningConfig {
    fn default() -> Self {
        Self {
            bins: 10,
            eps: 1e-6,
            thresholds: IvThresholds::default(),
            iv_cut: 0.1,
            iv_years: 3,
            alpha: 0.10,
            p_years: 3,
            corr_cut: 0.5,
            min_links: 2,
            years: YEARS.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IvResult {
    pub criterion: String,
    pub year: u8,
    /// `None` when a year lacks one of the classes.
    pub iv: Option<f64>,
    pub grade: Grade,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    pub criterion: String,
    pub year: u8,
    pub t_statistic: Option<f64>,
    pub p_value: Option<f64>,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub year: u8,
    pub criteria: Vec<String>,
    pub r: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage3Removal {
    pub criterion: String,
    pub linked_to: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    RemovedStage1,
    RemovedStage2,
    RemovedStage3,
    Retained,
}

/// One criterion-year line in the layout of a stage-by-stage selection table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreeningRow {
    pub criterion: String,
    pub year: u8,
    pub iv: Option<f64>,
    pub grade: Grade,
    pub stage1: String,
    pub p_value: Option<f64>,
    pub stage2: String,
    pub stage3: String,
    pub decision: Decision,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreeningReport {
    pub input: Vec<String>,
    pub stage1_survivors: Vec<String>,
    pub stage2_survivors: Vec<String>,
    pub stage3_survivors: Vec<String>,
    pub retained: Vec<String>,
    pub stage3_removed: Vec<Stage3Removal>,
    pub iv: Vec<IvResult>,
    pub t_tests: Vec<TTestResult>,
    pub correlations: Vec<CorrelationMatrix>,
    pub table: Vec<ScreeningRow>,
}

/// Values of criteria `i` and `j` for companies observed on both.
fn paired(ds: &PanelDataset, i: usize, j: usize, year: u8) -> (Vec<f64>, Vec<f64>) {
    ds.companies.iter().filter_map(|c| Some((c.value(i, year)?, c.value(j, year)?))).unzip()
}

pub fn run_screening(ds: &PanelDataset, cfg: &ScreeningConfig) -> Result<ScreeningReport> {
    let labels: Vec<Class> = ds.companies.iter().map(|c| c.label).collect();
    if !labels.contains(&Class::C1) || !labels.contains(&Class::C2) {
        return Err(Error::SingleClass);
    }
    if cfg.years.len() < 2 {
        return Err(Error::Invalid("screening needs at least 2 years".into()));
    }
    let ids = ds.criterion_ids();
    let nc = ids.len();

    let mut iv = Vec::new();
    let mut tt = Vec::new();
    let mut weak_years = vec![0usize; nc];
    let mut ns_years = vec![0usize; nc];
    let mut iv_sum = vec![0.0f64; nc];
    for (ci, id) in ids.iter().enumerate() {
        for &year in &cfg.years {
            let (vals, labs): (Vec<f64>, Vec<Class>) =
                ds.companies.iter().filter_map(|c| Some((c.value(ci, year)?, c.label))).unzip();
            let v = information_value(&vals, &labs, cfg.bins, cfg.eps).ok();
            if v.is_none_or(|v| v < cfg.iv_cut) {
                weak_years[ci] += 1;
            }
            iv_sum[ci] += v.unwrap_or(0.0);
            iv.push(IvResult { criterion: id.clone(), year, iv: v, grade: cfg.thresholds.grade(v.unwrap_or(0.0)) });

            let (a, b) = ds.class_values(ci, year);
            let t = t_test(&a, &b).ok();
            let significant = t.is_some_and(|t| t.p_value < cfg.alpha);
            if !significant {
                ns_years[ci] += 1;
            }
            tt.push(TTestResult {
                criterion: id.clone(),
                year,
                t_statistic: t.map(|t| t.t_statistic),
                p_value: t.map(|t| t.p_value),
                significant,
            });
        }
    }

    let stage1: Vec<usize> = (0..nc).filter(|&c| weak_years[c] < cfg.iv_years).collect();
    let stage2: Vec<usize> = stage1.iter().copied().filter(|&c| ns_years[c] < cfg.p_years).collect();

    // Pearson r among Stage-2 survivors, per year.
    let k = stage2.len();
    let mut correlations = Vec::new();
    let mut linked = vec![vec![true; k]; k];
    for &year in &cfg.years {
        let mut r = vec![vec![0.0; k]; k];
        for a in 0..k {
            r[a][a] = 1.0;
            for b in a + 1..k {
                let (x, y) = paired(ds, stage2[a], stage2[b], year);
                let v = pearson(&x, &y).unwrap_or(0.0);
                r[a][b] = v;
                r[b][a] = v;
                if v.abs() < cfg.corr_cut {
                    linked[a][b] = false;
                    linked[b][a] = false;
                }
            }
        }
        correlations.push(CorrelationMatrix { year, criteria: stage2.iter().map(|&c| ids[c].clone()).collect(), r });
    }

    // Remove the most connected criterion until none has enough links.
    let mut alive = vec![true; k];
    let mut removed = Vec::new();
    loop {
        let links = |a: usize, alive: &[bool]| -> Vec<usize> {
            (0..k).filter(|&b| b != a && alive[b] && linked[a][b]).collect()
        };
        let pick = (0..k)
            .filter(|&a| alive[a])
            .map(|a| (a, links(a, &alive).len()))
            .filter(|&(_, n)| n >= cfg.min_links)
            .min_by(|&(a, na), &(b, nb)| {
                nb.cmp(&na).then(iv_sum[stage2[a]].total_cmp(&iv_sum[stage2[b]])).then(a.cmp(&b))
            });
        let Some((a, _)) = pick else { break };
        removed.push(Stage3Removal {
            criterion: ids[stage2[a]].clone(),
            linked_to: links(a, &alive).into_iter().map(|b| ids[stage2[b]].clone()).collect(),
        });
        alive[a] = false;
    }
    let stage3: Vec<usize> = (0..k).filter(|&a| alive[a]).map(|a| stage2[a]).collect();

    let names = |v: &[usize]| -> Vec<String> { v.iter().map(|&c| ids[c].clone()).collect() };
    let sig = |b: bool| if b { "S" } else { "NS" }.to_string();
    let ny = cfg.years.len();
    let table = (0..nc)
        .flat_map(|c| {
            let decision = if stage3.contains(&c) {
                Decision::Retained
            } else if stage2.contains(&c) {
                Decision::RemovedStage3
            } else if stage1.contains(&c) {
                Decision::RemovedStage2
            } else {
                Decision::RemovedStage1
            };
            let (iv, tt) = (&iv, &tt);
            (0..ny).map(move |y| {
                let ivr = &iv[c * ny + y];
                let ttr = &tt[c * ny + y];
                ScreeningRow {
                    criterion: ivr.criterion.clone(),
                    year: ivr.year,
                    iv: ivr.iv,
                    grade: ivr.grade,
                    stage1: sig(ivr.iv.is_some_and(|v| v >= cfg.iv_cut)),
                    p_value: ttr.p_value,
                    stage2: sig(ttr.significant),
                    stage3: sig(decision == Decision::Retained),
                    decision,
                }
            })
        })
        .collect();

    Ok(ScreeningReport {
        input: ids.clone(),
        stage1_survivors: names(&stage1),
        stage2_survivors: names(&stage2),
        stage3_survivors: names(&stage3),
        retained: names(&stage3),
        stage3_removed: removed,
        iv,
        t_tests: tt,
        correlations,
        table,
    })
}
