//! Balanced resampling, stratified folds and weight simulation on the simplex.

use std::str::FromStr;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::{Class, PanelDataset, SizeStratum};
use crate::error::{Error, Result};
use crate::rng::task_rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StratifiedPlan {
    pub counts: Vec<usize>,
    pub total_inactive: usize,
    pub quotas: Vec<f64>,
    pub allocations: Vec<usize>,
}

/// Proportional allocation of `total_inactive` draws across strata. Whether
/// each stratum can supply its allocation is checked when drawing.
///
/// Each nonempty stratum gets `max(floor(quota), 1)`; the residual is then
/// settled one unit at a time, adding by largest remainder or removing from
/// the most over-allocated stratum. Ties go to the lower index.
pub fn stratified_allocation(counts: &[usize], total_inactive: usize) -> Result<StratifiedPlan> {
    let total_active: usize = counts.iter().sum();
    if total_active == 0 {
        return Err(Error::Invalid("total active count must be positive".into()));
    }
    let quotas: Vec<f64> = counts.iter().map(|&n| total_inactive as f64 * n as f64 / total_active as f64).collect();
    let mut alloc: Vec<usize> =
        counts.iter().zip(&quotas).map(|(&n, &q)| if n == 0 { 0 } else { (q.floor() as usize).max(1) }).collect();
    let by_desc = |key: &dyn Fn(usize) -> f64, eligible: &dyn Fn(usize) -> bool| {
        (0..counts.len()).filter(|&j| eligible(j)).min_by(|&a, &b| key(b).total_cmp(&key(a)).then(a.cmp(&b)))
    };
    loop {
        let sum: usize = alloc.iter().sum();
        if sum == total_inactive {
            break;
        }
        let j = if sum < total_inactive {
            by_desc(&|j| quotas[j] - alloc[j] as f64, &|j| counts[j] > 0)
        } else {
            by_desc(&|j| alloc[j] as f64 - quotas[j], &|j| alloc[j] > 1)
        };
        let Some(j) = j else {
            return Err(Error::Invalid(format!(
                "cannot allocate {total_inactive} draws with a floor of one per nonempty stratum"
            )));
        };
        if sum < total_inactive {
            alloc[j] += 1;
        } else {
            alloc[j] -= 1;
        }
    }
    Ok(StratifiedPlan { counts: counts.to_vec(), total_inactive, quotas, allocations: alloc })
}

/// Allocates and draws ids uniformly without replacement within each stratum.
/// Drawn ids keep their input order.
pub fn stratified_resample(
    strata: &[Vec<String>],
    total_inactive: usize,
    seed: u64,
) -> Result<(StratifiedPlan, Vec<String>)> {
    let counts: Vec<usize> = strata.iter().map(Vec::len).collect();
    let plan = stratified_allocation(&counts, total_inactive)?;
    for (j, (&a, &n)) in plan.allocations.iter().zip(&counts).enumerate() {
        if a > n {
            return Err(Error::AllocationExceedsPopulation { stratum: j, allocation: a, population: n });
        }
    }
    let mut ids = Vec::new();
    for (j, members) in strata.iter().enumerate() {
        let mut rng = task_rng(seed, &format!("resample/stratum/{j}"));
        let mut pick = index::sample(&mut rng, members.len(), plan.allocations[j]).into_vec();
        pick.sort_unstable();
        ids.extend(pick.into_iter().map(|i| members[i].clone()));
    }
    Ok((plan, ids))
}

/// Keeps every inactive company and a size-stratified sample of actives of
/// the same total. Companies keep their input order.
pub fn balance_dataset(ds: &PanelDataset, seed: u64) -> Result<(StratifiedPlan, PanelDataset)> {
    let mut strata = vec![Vec::new(); SizeStratum::ALL.len()];
    let mut inactive = 0;
    for c in &ds.companies {
        match c.label {
            Class::C1 => strata[c.size_stratum.index()].push(c.company_id.clone()),
            Class::C2 => inactive += 1,
        }
    }
    let (plan, ids) = stratified_resample(&strata, inactive, seed)?;
    let keep: std::collections::HashSet<&str> = ids.iter().map(String::as_str).collect();
    let idx: Vec<usize> = ds
        .companies
        .iter()
        .enumerate()
        .filter(|(_, c)| c.label == Class::C2 || keep.contains(c.company_id.as_str()))
        .map(|(i, _)| i)
        .collect();
    Ok((plan, ds.subset(&idx)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FoldMode {
    /// Every company is tested exactly once.
    #[default]
    Partition,
    /// `k` disjoint test sets of `floor(n_class / k)` per class; the
    /// remainder is never tested.
    PaperLiteral,
}

impl FromStr for FoldMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "partition" => Ok(FoldMode::Partition),
            "paper_literal" => Ok(FoldMode::PaperLiteral),
            _ => Err(format!("unknown fold mode {s:?} (partition | paper_literal)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<String>,
    pub test: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    pub mode: FoldMode,
    pub folds: Vec<Fold>,
}

impl FoldPlan {
    /// Row indices of each fold's train and test sets, in input order.
    pub fn indices(&self, ids: &[String]) -> Vec<(Vec<usize>, Vec<usize>)> {
        let pos: std::collections::HashMap<&str, usize> =
            ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let map = |v: &[String]| -> Vec<usize> {
            let mut out: Vec<usize> = v.iter().filter_map(|s| pos.get(s.as_str()).copied()).collect();
            out.sort_unstable();
            out
        };
        self.folds.iter().map(|f| (map(&f.train), map(&f.test))).collect()
    }
}

/// Class-stratified k-fold split.
pub fn kfold_split(ids: &[String], labels: &[Class], k: usize, mode: FoldMode, seed: u64) -> Result<FoldPlan> {
    if ids.len() != labels.len() {
        return Err(Error::LengthMismatch(ids.len(), labels.len()));
    }
    if k < 2 {
        return Err(Error::Invalid("k must be at least 2".into()));
    }
    let mut fold_of = vec![None; ids.len()];
    let mut offset = 0;
    for class in [Class::C1, Class::C2] {
        let mut members: Vec<usize> = (0..ids.len()).filter(|&i| labels[i] == class).collect();
        if members.len() < k {
            return Err(Error::ClassTooSmall { class: class.to_string(), size: members.len(), k });
        }
        members.shuffle(&mut task_rng(seed, &format!("kfold/{class}")));
        match mode {
            FoldMode::Partition => {
                // Dealing continues across classes so fold sizes differ by at most one.
                for (r, &i) in members.iter().enumerate() {
                    fold_of[i] = Some((offset + r) % k);
                }
                offset = (offset + members.len()) % k;
            }
            FoldMode::PaperLiteral => {
                let q = members.len() / k;
                for (r, &i) in members.iter().take(q * k).enumerate() {
                    fold_of[i] = Some(r / q);
                }
            }
        }
    }
    let folds = (0..k)
        .map(|f| {
            let (test, train): (Vec<usize>, Vec<usize>) = (0..ids.len()).partition(|&i| fold_of[i] == Some(f));
            Fold {
                train: train.into_iter().map(|i| ids[i].clone()).collect(),
                test: test.into_iter().map(|i| ids[i].clone()).collect(),
            }
        })
        .collect();
    Ok(FoldPlan { k, seed, mode, folds })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMethod {
    #[default]
    HitAndRun,
    ExactUniform,
}

pub const BURN_IN: usize = 100;

fn renormalize(w: &mut [f64]) {
    for v in w.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let s: f64 = w.iter().sum();
    for v in w.iter_mut() {
        *v /= s;
    }
}

/// Weight vectors uniformly distributed on the unit simplex.
pub fn sample_weights(n: usize, scenarios: usize, seed: u64, method: WeightMethod) -> Vec<Vec<f64>> {
    if n == 0 {
        return vec![Vec::new(); scenarios];
    }
    if n == 1 {
        return vec![vec![1.0]; scenarios];
    }
    match method {
        WeightMethod::ExactUniform => {
            let mut rng = task_rng(seed, "weights/exact");
            (0..scenarios)
                .map(|_| {
                    let mut w: Vec<f64> = (0..n).map(|_| Exp1.sample(&mut rng)).collect();
                    renormalize(&mut w);
                    w
                })
                .collect()
        }
        WeightMethod::HitAndRun => {
            let mut rng = task_rng(seed, "weights/hit-and-run");
            let mut x = vec![1.0 / n as f64; n];
            let mut out = Vec::with_capacity(scenarios);
            for step in 0..BURN_IN + scenarios {
                hit_and_run_step(&mut x, &mut rng);
                if step >= BURN_IN {
                    let mut w = x.clone();
                    renormalize(&mut w);
                    out.push(w);
                }
            }
            out
        }
    }
}

/// One move along a random direction inside the simplex.
fn hit_and_run_step(x: &mut [f64], rng: &mut impl Rng) {
    let n = x.len();
    let d = loop {
        let mut d: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        let m = d.iter().sum::<f64>() / n as f64;
        for v in &mut d {
            *v -= m;
        }
        if d.iter().any(|v| v.abs() > 1e-12) {
            break d;
        }
    };
    // Feasible chord {t : x + t d >= 0}.
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for (xi, di) in x.iter().zip(&d) {
        if *di > 0.0 {
            lo = lo.max(-xi / di);
        } else if *di < 0.0 {
            hi = hi.min(-xi / di);
        }
    }
    let t = lo + (hi - lo) * rng.random::<f64>();
    for (xi, di) in x.iter_mut().zip(&d) {
        *xi = (*xi + t * di).max(0.0);
    }
    renormalize(x);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn allocation_examples() {
        let p = stratified_allocation(&[827, 635, 83, 6], 57).unwrap();
        assert_eq!(p.allocations, vec![30, 23, 3, 1]);
        // Quotas as printed: truncated to three decimals.
        let q: Vec<f64> = p.quotas.iter().map(|q| (q * 1000.0).floor() / 1000.0).collect();
        assert_eq!(q, vec![30.392, 23.336, 3.050, 0.220]);
        assert_eq!(stratified_allocation(&[10], 5).unwrap().allocations, vec![5]);
        assert_eq!(stratified_allocation(&[1, 1], 3).unwrap().allocations, vec![2, 1]);
        let strata = vec![vec!["a".to_string()], vec!["b".to_string()]];
        assert!(matches!(
            stratified_resample(&strata, 3, 0),
            Err(Error::AllocationExceedsPopulation { stratum: 0, allocation: 2, population: 1 })
        ));
        let (_, ids) = stratified_resample(&strata, 2, 0).unwrap();
        assert_eq!(ids, ["a", "b"]);
    }

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("c{i}")).collect()
    }

    #[test]
    fn paper_literal_folds() {
        let labels: Vec<Class> = (0..114).map(|i| Class::from_index(i % 2)).collect();
        let plan = kfold_split(&ids(114), &labels, 5, FoldMode::PaperLiteral, 1).unwrap();
        for f in &plan.folds {
            assert_eq!(f.train.len(), 92);
            assert_eq!(f.test.len(), 22);
        }
    }

    #[test]
    fn partition_folds() {
        let labels: Vec<Class> = (0..10).map(|i| Class::from_index(i % 2)).collect();
        let plan = kfold_split(&ids(10), &labels, 5, FoldMode::Partition, 1).unwrap();
        for f in &plan.folds {
            assert_eq!(f.test.len(), 2);
            let c1 = f.test.iter().filter(|id| id[1..].parse::<usize>().unwrap() % 2 == 0).count();
            assert_eq!(c1, 1);
        }
        assert_eq!(plan, kfold_split(&ids(10), &labels, 5, FoldMode::Partition, 1).unwrap());
        assert!(matches!(kfold_split(&ids(10), &labels, 6, FoldMode::Partition, 1), Err(Error::ClassTooSmall { .. })));
    }

    #[test]
    fn weights_lie_on_simplex() {
        assert_eq!(sample_weights(1, 3, 0, WeightMethod::HitAndRun), vec![vec![1.0]; 3]);
        for method in [WeightMethod::HitAndRun, WeightMethod::ExactUniform] {
            for w in sample_weights(4, 500, 9, method) {
                assert!(w.iter().all(|&v| v >= 0.0));
                assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            }
        }
    }
}
