//! PROMETHEE II net flows under simulated weights, the median-cut two-class
//! labeling and the vote across preference functions.
//!
//! Input matrices are expected to be direction-aligned (larger is better on
//! every criterion).

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{Class, PerformanceMatrix};
use crate::error::{Error, Result};
use crate::sampling::{sample_weights, WeightMethod};
use crate::stats::{median, pairwise_sum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreferenceFunctionKind {
    Usual,
    UShape,
    VShape,
    Level,
    Linear,
    Gaussian,
}

impl PreferenceFunctionKind {
    pub const ALL: [Self; 6] = [Self::Usual, Self::UShape, Self::VShape, Self::Level, Self::Linear, Self::Gaussian];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Usual => "usual",
            Self::UShape => "u_shape",
            Self::VShape => "v_shape",
            Self::Level => "level",
            Self::Linear => "linear",
            Self::Gaussian => "gaussian",
        }
    }
}

impl fmt::Display for PreferenceFunctionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PreferenceFunctionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown preference function `{s}`")))
    }
}

/// Thresholds of one criterion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Data range.
    pub r: f64,
    pub q: f64,
    pub p: f64,
    pub s: f64,
}

impl Thresholds {
    pub fn from_range(r: f64) -> Self {
        let q = r / 6.0;
        let p = 2.0 * r / 3.0;
        Self { r, q, p, s: (p + q) / 2.0 }
    }

    pub fn from_values(values: &[f64]) -> Self {
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Self::from_range((hi - lo).abs())
    }
}

pub fn preference_degree(kind: PreferenceFunctionKind, d: f64, t: &Thresholds) -> f64 {
    use PreferenceFunctionKind::*;
    if d <= 0.0 {
        return 0.0;
    }
    match kind {
        Usual => 1.0,
        UShape => {
            if d > t.q {
                1.0
            } else {
                0.0
            }
        }
        VShape => {
            if d >= t.p {
                1.0
            } else {
                d / t.p
            }
        }
        Level => {
            if d <= t.q {
                0.0
            } else if d <= t.p {
                0.5
            } else {
                1.0
            }
        }
        Linear => {
            if d <= t.q {
                0.0
            } else if d <= t.p {
                (d - t.q) / (t.p - t.q)
            } else {
                1.0
            }
        }
        Gaussian => 1.0 - (-d * d / (2.0 * t.s * t.s)).exp(),
    }
}

/// Preference degree with zero-range criteria contributing nothing.
fn degree(kind: PreferenceFunctionKind, d: f64, t: &Thresholds) -> f64 {
    if t.r > 0.0 {
        preference_degree(kind, d, t)
    } else {
        0.0
    }
}

/// Aggregated preference index π(j, y) = Σ_i w_i P_i(g_i(j) − g_i(y)).
pub fn pairwise_pi(
    m: &PerformanceMatrix,
    w: &[f64],
    kind: PreferenceFunctionKind,
    thresholds: &[Thresholds],
) -> Result<Vec<Vec<f64>>> {
    let n = m.n_criteria();
    if w.len() != n {
        return Err(Error::LengthMismatch(w.len(), n));
    }
    if thresholds.len() != n {
        return Err(Error::LengthMismatch(thresholds.len(), n));
    }
    let rows = &m.rows;
    Ok((0..rows.len())
        .map(|j| {
            (0..rows.len())
                .map(|y| {
                    if j == y {
                        return 0.0;
                    }
                    (0..n).map(|i| w[i] * degree(kind, rows[j][i] - rows[y][i], &thresholds[i])).sum()
                })
                .collect()
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Flow {
    pub phi_plus: f64,
    pub phi_minus: f64,
    pub phi: f64,
}

pub fn net_flows(pi: &[Vec<f64>]) -> Result<Vec<Flow>> {
    let m = pi.len();
    if m < 2 {
        return Err(Error::Invalid(format!("net flows need at least 2 alternatives, got {m}")));
    }
    if let Some(row) = pi.iter().find(|r| r.len() != m) {
        return Err(Error::LengthMismatch(row.len(), m));
    }
    let scale = 1.0 / (m - 1) as f64;
    Ok((0..m)
        .map(|j| {
            let out: Vec<f64> = (0..m).filter(|&y| y != j).map(|y| pi[j][y]).collect();
            let inc: Vec<f64> = (0..m).filter(|&y| y != j).map(|y| pi[y][j]).collect();
            let phi_plus = scale * pairwise_sum(&out);
            let phi_minus = scale * pairwise_sum(&inc);
            Flow { phi_plus, phi_minus, phi: phi_plus - phi_minus }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrometheeConfig {
    pub scenarios: usize,
    pub seed: u64,
    pub weights: WeightMethod,
}

impl Default for PrometheeConfig {
    fn default() -> Self {
        Self { scenarios: 10_000, seed: 0, weights: WeightMethod::HitAndRun }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionThresholds {
    pub criterion: String,
    #[serde(flatten)]
    pub thresholds: Thresholds,
}

/// Scenario-averaged flows of every company.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetFlowTable {
    pub kind: PreferenceFunctionKind,
    pub criteria: Vec<String>,
    pub scenarios: usize,
    pub thresholds: Vec<CriterionThresholds>,
    pub company_ids: Vec<String>,
    pub flows: Vec<Flow>,
    pub warnings: Vec<String>,
}

impl NetFlowTable {
    pub fn phi(&self) -> Vec<f64> {
        self.flows.iter().map(|f| f.phi).collect()
    }
}

/// Per-criterion flows (φ⁺, φ⁻) of every alternative; the flows under any
/// weight vector are their weighted sums.
fn unicriterion_flows(
    m: &PerformanceMatrix,
    kind: PreferenceFunctionKind,
    thresholds: &[Thresholds],
) -> Vec<Vec<(f64, f64)>> {
    let n_rows = m.n_rows();
    let scale = 1.0 / (n_rows - 1) as f64;
    (0..m.n_criteria())
        .map(|i| {
            let col = m.column(i);
            let t = &thresholds[i];
            (0..n_rows)
                .map(|j| {
                    let out: Vec<f64> =
                        (0..n_rows).filter(|&y| y != j).map(|y| degree(kind, col[j] - col[y], t)).collect();
                    let inc: Vec<f64> =
                        (0..n_rows).filter(|&y| y != j).map(|y| degree(kind, col[y] - col[j], t)).collect();
                    (scale * pairwise_sum(&out), scale * pairwise_sum(&inc))
                })
                .collect()
        })
        .collect()
}

/// Flows of every alternative under each weight scenario, averaged.
fn averaged_flows(uni: &[Vec<(f64, f64)>], weights: &[Vec<f64>]) -> Vec<Flow> {
    let n_rows = uni[0].len();
    (0..n_rows)
        .map(|j| {
            let mut plus = Vec::with_capacity(weights.len());
            let mut minus = Vec::with_capacity(weights.len());
            let mut phi = Vec::with_capacity(weights.len());
            for w in weights {
                let p: f64 = w.iter().zip(uni).map(|(wi, u)| wi * u[j].0).sum();
                let n: f64 = w.iter().zip(uni).map(|(wi, u)| wi * u[j].1).sum();
                plus.push(p);
                minus.push(n);
                phi.push(p - n);
            }
            let k = weights.len() as f64;
            Flow { phi_plus: pairwise_sum(&plus) / k, phi_minus: pairwise_sum(&minus) / k, phi: pairwise_sum(&phi) / k }
        })
        .collect()
}

/// PROMETHEE II on the `criteria` columns of `m` with simulated weights.
pub fn run_promethee<S: AsRef<str>>(
    m: &PerformanceMatrix,
    criteria: &[S],
    kind: PreferenceFunctionKind,
    cfg: &PrometheeConfig,
) -> Result<NetFlowTable> {
    if criteria.is_empty() {
        return Err(Error::Invalid("PROMETHEE needs at least one criterion".into()));
    }
    if cfg.scenarios == 0 {
        return Err(Error::Invalid("at least one weight scenario is required".into()));
    }
    let sub = m.select_criteria(criteria)?;
    if sub.n_rows() < 2 {
        return Err(Error::Invalid(format!("net flows need at least 2 alternatives, got {}", sub.n_rows())));
    }
    let thresholds: Vec<Thresholds> = (0..sub.n_criteria()).map(|i| Thresholds::from_values(&sub.column(i))).collect();
    let warnings = sub
        .criteria
        .iter()
        .zip(&thresholds)
        .filter(|(_, t)| t.r <= 0.0)
        .map(|(c, _)| format!("criterion {c} has zero range and contributes no preference"))
        .collect();
    let weights = sample_weights(sub.n_criteria(), cfg.scenarios, cfg.seed, cfg.weights);
    let uni = unicriterion_flows(&sub, kind, &thresholds);
    Ok(NetFlowTable {
        kind,
        criteria: sub.criteria.clone(),
        scenarios: cfg.scenarios,
        thresholds: sub
            .criteria
            .iter()
            .zip(&thresholds)
            .map(|(c, &t)| CriterionThresholds { criterion: c.clone(), thresholds: t })
            .collect(),
        company_ids: sub.company_ids.clone(),
        flows: averaged_flows(&uni, &weights),
        warnings,
    })
}

/// Net flows under one fixed weight vector.
pub fn flows_at_weights<S: AsRef<str>>(
    m: &PerformanceMatrix,
    criteria: &[S],
    kind: PreferenceFunctionKind,
    w: &[f64],
) -> Result<Vec<Flow>> {
    let sub = m.select_criteria(criteria)?;
    if w.len() != sub.n_criteria() {
        return Err(Error::LengthMismatch(w.len(), sub.n_criteria()));
    }
    let thresholds: Vec<Thresholds> = (0..sub.n_criteria()).map(|i| Thresholds::from_values(&sub.column(i))).collect();
    net_flows(&pairwise_pi(&sub, w, kind, &thresholds)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrometheeClassification {
    pub kind: PreferenceFunctionKind,
    pub company_ids: Vec<String>,
    pub cutoff: f64,
    pub classes: Vec<Class>,
}

/// Companies with a flow strictly above the median are C1, the rest C2.
pub fn median_cut(t: &NetFlowTable) -> PrometheeClassification {
    let phi = t.phi();
    let cutoff = median(&phi);
    PrometheeClassification {
        kind: t.kind,
        company_ids: t.company_ids.clone(),
        cutoff,
        classes: phi.iter().map(|&f| if f > cutoff { Class::C1 } else { Class::C2 }).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VoteStatus {
    C1,
    C2,
    #[serde(rename = "undetermined")]
    Undetermined,
}

impl fmt::Display for VoteStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::C1 => "C1",
            Self::C2 => "C2",
            Self::Undetermined => "undetermined",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MajorityVote {
    pub company_ids: Vec<String>,
    /// One label per company per input classification, in input order.
    pub labels: Vec<Vec<Class>>,
    pub c1_votes: Vec<usize>,
    pub status: Vec<VoteStatus>,
}

/// Labels agreed on by at least four of the six preference functions.
pub fn majority_vote(per_kind: &[PrometheeClassification]) -> Result<MajorityVote> {
    if per_kind.len() != 6 {
        return Err(Error::Invalid(format!("majority vote needs six classifications, got {}", per_kind.len())));
    }
    let ids = &per_kind[0].company_ids;
    if per_kind.iter().any(|c| &c.company_ids != ids) {
        return Err(Error::Invalid("classifications cover different companies".into()));
    }
    let labels: Vec<Vec<Class>> = (0..ids.len()).map(|j| per_kind.iter().map(|c| c.classes[j]).collect()).collect();
    let c1_votes: Vec<usize> = labels.iter().map(|l| l.iter().filter(|&&c| c == Class::C1).count()).collect();
    let status = c1_votes
        .iter()
        .map(|&v| match v {
            4.. => VoteStatus::C1,
            0..=2 => VoteStatus::C2,
            _ => VoteStatus::Undetermined,
        })
        .collect();
    Ok(MajorityVote { company_ids: ids.clone(), labels, c1_votes, status })
}

/// Writes `company_id,phi_plus,phi_minus,phi,class`.
pub fn write_flows_csv<W: Write>(t: &NetFlowTable, classes: Option<&PrometheeClassification>, sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["company_id", "phi_plus", "phi_minus", "phi", "class"])?;
    for (j, (id, f)) in t.company_ids.iter().zip(&t.flows).enumerate() {
        let class = classes.map(|c| c.classes[j].to_string()).unwrap_or_default();
        w.write_record([id.clone(), f.phi_plus.to_string(), f.phi_minus.to_string(), f.phi.to_string(), class])?;
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Direction, SizeStratum};
    use PreferenceFunctionKind::*;

    pub(crate) fn matrix(rows: Vec<Vec<f64>>) -> PerformanceMatrix {
        let n = rows[0].len();
        let m = rows.len();
        PerformanceMatrix {
            year: 1,
            criteria: (0..n).map(|i| format!("g{i}")).collect(),
            directions: vec![Direction::Increasing; n],
            company_ids: (0..m).map(|j| format!("a{j}")).collect(),
            labels: vec![Class::C1; m],
            strata: vec![SizeStratum::Large; m],
            rows,
        }
    }

    #[test]
    fn thresholds_for_range_six() {
        let t = Thresholds::from_range(6.0);
        assert_eq!((t.q, t.p, t.s), (1.0, 4.0, 2.5));
    }

    #[test]
    fn closed_forms() {
        let t = Thresholds::from_range(6.0);
        for k in PreferenceFunctionKind::ALL {
            assert_eq!(preference_degree(k, 0.0, &t), 0.0);
            assert_eq!(preference_degree(k, -3.0, &t), 0.0);
        }
        assert_eq!(preference_degree(Linear, 2.5, &t), 0.5);
        assert_eq!(preference_degree(Usual, 1e-9, &t), 1.0);
        assert_eq!(preference_degree(UShape, 1.0, &t), 0.0);
        assert_eq!(preference_degree(UShape, 1.5, &t), 1.0);
        assert_eq!(preference_degree(VShape, 2.0, &t), 0.5);
        assert_eq!(preference_degree(VShape, 5.0, &t), 1.0);
        assert_eq!(preference_degree(Level, 1.0, &t), 0.0);
        assert_eq!(preference_degree(Level, 4.0, &t), 0.5);
        assert_eq!(preference_degree(Level, 4.5, &t), 1.0);
        let g = preference_degree(Gaussian, 2.5, &t);
        assert!((g - (1.0 - (-0.5f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn pi_examples() {
        let m = matrix(vec![vec![1.0, 2.0], vec![1.0, 2.0], vec![0.0, 1.0], vec![2.0, 0.0]]);
        let t = [Thresholds::from_range(2.0), Thresholds::from_range(2.0)];
        let pi = pairwise_pi(&m, &[0.5, 0.5], Usual, &t).unwrap();
        assert_eq!((pi[0][1], pi[1][0]), (0.0, 0.0));
        assert_eq!((pi[0][2], pi[2][0]), (1.0, 0.0));
        assert_eq!((pi[0][3], pi[3][0]), (0.5, 0.5));
        assert!((0..4).all(|j| pi[j][j] == 0.0));
    }

    #[test]
    fn flow_examples() {
        let m = matrix(vec![vec![3.0, 2.0], vec![1.0, 1.0]]);
        let f = flows_at_weights(&m, &["g0", "g1"], Usual, &[0.3, 0.7]).unwrap();
        assert_eq!((f[0].phi, f[1].phi), (1.0, -1.0));
        let same = matrix(vec![vec![1.0]; 4]);
        let f = flows_at_weights(&same, &["g0"], Gaussian, &[1.0]).unwrap();
        assert!(f.iter().all(|x| x.phi == 0.0));
        assert!(net_flows(&[vec![0.0]]).is_err());
    }

    #[test]
    fn single_criterion_average_equals_single_flow() {
        let m = matrix(vec![vec![0.1], vec![0.5], vec![0.2], vec![0.9]]);
        let cfg = PrometheeConfig { scenarios: 50, ..Default::default() };
        let t = run_promethee(&m, &["g0"], Linear, &cfg).unwrap();
        let f = flows_at_weights(&m, &["g0"], Linear, &[1.0]).unwrap();
        for (a, b) in t.flows.iter().zip(&f) {
            assert!((a.phi - b.phi).abs() < 1e-12);
        }
        assert_eq!(run_promethee(&m, &["g0"], Linear, &cfg).unwrap(), t);
    }

    #[test]
    fn zero_range_warns() {
        let m = matrix(vec![vec![1.0, 0.0], vec![1.0, 1.0], vec![1.0, 2.0]]);
        let cfg = PrometheeConfig { scenarios: 10, ..Default::default() };
        let t = run_promethee(&m, &["g0", "g1"], Gaussian, &cfg).unwrap();
        assert_eq!(t.warnings.len(), 1);
        assert!(t.flows.iter().all(|f| f.phi.is_finite()));
    }

    fn table(phi: &[f64]) -> NetFlowTable {
        NetFlowTable {
            kind: Usual,
            criteria: vec![],
            scenarios: 1,
            thresholds: vec![],
            company_ids: (0..phi.len()).map(|j| format!("a{j}")).collect(),
            flows: phi.iter().map(|&p| Flow { phi_plus: 0.0, phi_minus: 0.0, phi: p }).collect(),
            warnings: vec![],
        }
    }

    #[test]
    fn median_cut_examples() {
        let c = median_cut(&table(&[0.5, 0.1, -0.2, -0.6]));
        assert!((c.cutoff + 0.05).abs() < 1e-15);
        assert_eq!(c.classes, vec![Class::C1, Class::C1, Class::C2, Class::C2]);
        let c = median_cut(&table(&[0.0; 5]));
        assert!(c.classes.iter().all(|&x| x == Class::C2));
    }

    fn cls(classes: Vec<Class>) -> PrometheeClassification {
        PrometheeClassification {
            kind: Usual,
            company_ids: (0..classes.len()).map(|j| format!("a{j}")).collect(),
            cutoff: 0.0,
            classes,
        }
    }

    #[test]
    fn vote_examples() {
        use Class::*;
        let votes = [[C1, C1, C2], [C1, C1, C2], [C1, C1, C2], [C1, C2, C2], [C1, C2, C1], [C1, C2, C1]];
        let input: Vec<_> = votes.iter().map(|v| cls(v.to_vec())).collect();
        let v = majority_vote(&input).unwrap();
        assert_eq!(v.status, vec![VoteStatus::C1, VoteStatus::Undetermined, VoteStatus::C2]);
        assert!(majority_vote(&input[..5]).is_err());
        let mut bad = input.clone();
        bad[2].company_ids[0] = "zz".into();
        assert!(majority_vote(&bad).is_err());
    }

    #[test]
    fn csv_layout() {
        let t = table(&[0.5, -0.5]);
        let c = median_cut(&t);
        let mut out = Vec::new();
        write_flows_csv(&t, Some(&c), &mut out).unwrap();
        let s = String::from_utf8(out).unwrap();
        assert_eq!(s.lines().next(), Some("company_id,phi_plus,phi_minus,phi,class"));
        assert_eq!(s.lines().nth(1), Some("a0,0,0,0.5,C1"));
    }
}
