//! Multi-group hierarchical discrimination.
//!
//! Each hierarchy stage k fits two additive utility functions, U_k for "belongs
//! to C_k" and U_~k for "belongs to a riskier category", through a cascade of
//! three programs:
//!
//! * LP1 minimizes the total classification error;
//! * a mixed-binary program minimizes the number of misclassified alternatives,
//!   with binaries only for the alternatives LP1 got wrong;
//! * LP2 keeps that classification and maximizes the separation margin of the
//!   correctly classified alternatives.
//!
//! Marginal utilities are piecewise linear on equal-width breakpoints. The
//! decision variables are the nonnegative increments between consecutive
//! breakpoints, so monotonicity comes from the variable bounds.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{Class, PerformanceMatrix};
use crate::error::{Error, Result};
use crate::optimizer::{
    solve_lp, solve_mip_with, LinearProgram, MipOptions, MixedBinaryProgram, Relation, Sense, SolverError, Status,
    Tolerances,
};

/// Utility differences closer than this are ties.
pub const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieRule {
    /// A tie does not claim the alternative; it moves on to the riskier branch.
    #[default]
    Riskier,
    /// A tie assigns the alternative to the stage's category.
    Healthier,
}

impl FromStr for TieRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "riskier" => Ok(Self::Riskier),
            "healthier" => Ok(Self::Healthier),
            _ => Err(Error::Invalid(format!("unknown tie rule `{s}`"))),
        }
    }
}

/// Objective of the margin-maximization program.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Lp2Objective {
    /// Maximize the smallest margin, then the sum of margins at that optimum.
    #[default]
    MinMargin,
    /// Maximize the sum of margins subject to every margin being at least δ.
    SumMargins,
}

impl FromStr for Lp2Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "min_margin" => Ok(Self::MinMargin),
            "sum_margins" => Ok(Self::SumMargins),
            _ => Err(Error::Invalid(format!("unknown LP2 objective `{s}`"))),
        }
    }
}

/// Alternatives that get a misclassification binary in the MIP.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MipScope {
    /// Only those LP1 misclassified; the rest keep hard constraints. This can
    /// miss the minimum count, since LP1's correct set need not be part of it.
    #[default]
    Lp1Errors,
    /// Every alternative: the exact minimum, at a higher branching cost.
    All,
}

impl FromStr for MipScope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lp1_errors" => Ok(Self::Lp1Errors),
            "all" => Ok(Self::All),
            _ => Err(Error::Invalid(format!("unknown MIP scope `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MhdisConfig {
    /// Subintervals per criterion.
    pub breakpoints: usize,
    /// Separation threshold δ.
    pub delta: f64,
    pub tie_rule: TieRule,
    pub lp2: Lp2Objective,
    /// LP1 slacks above this count as misclassifications.
    pub error_tolerance: f64,
    /// Branch-and-bound budget per stage; past it the best classification
    /// found is kept and flagged as not proven optimal.
    pub mip_node_limit: usize,
    #[serde(default)]
    pub mip_scope: MipScope,
    pub solver: Tolerances,
}

impl Default for MhdisConfig {
    fn default() -> Self {
        Self {
            breakpoints: 3,
            delta: 0.001,
            tie_rule: TieRule::Riskier,
            lp2: Lp2Objective::MinMargin,
            error_tolerance: 1e-7,
            mip_node_limit: 2_000,
            mip_scope: MipScope::Lp1Errors,
            solver: Tolerances::default(),
        }
    }
}

impl MhdisConfig {
    fn validate(&self) -> Result<()> {
        if self.breakpoints == 0 {
            return Err(Error::Invalid("at least one subinterval per criterion is required".into()));
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(Error::Invalid(format!("delta must lie in (0, 1], got {}", self.delta)));
        }
        Ok(())
    }

    fn big_m(&self) -> f64 {
        1.0 + self.delta
    }
}

/// Piecewise-linear, non-decreasing marginal utility of one criterion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseUtility {
    pub criterion: String,
    pub breakpoints: Vec<f64>,
    /// Cumulative utility at each breakpoint; the first value is 0.
    pub values: Vec<f64>,
}

impl PiecewiseUtility {
    pub fn eval(&self, g: f64) -> f64 {
        let b = &self.breakpoints;
        let v = &self.values;
        if g <= b[0] {
            return v[0];
        }
        for k in 0..b.len() - 1 {
            if g < b[k + 1] {
                let t = (g - b[k]) / (b[k + 1] - b[k]);
                return v[k] + (v[k + 1] - v[k]) * t;
            }
        }
        v[v.len() - 1]
    }

    /// Largest marginal value, the criterion weight.
    pub fn weight(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn is_monotone(&self) -> bool {
        self.values.windows(2).all(|w| w[1] >= w[0])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    K,
    NotK,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageDiagnostics {
    pub stage: usize,
    pub n_alternatives: usize,
    pub n_group: usize,
    pub n_rest: usize,
    pub lp1_error: f64,
    /// Alternatives with a positive LP1 slack.
    pub lp1_misclassified: usize,
    pub mip_misclassified: usize,
    /// Whether branch and bound proved `mip_misclassified` minimal.
    pub mip_proven_optimal: bool,
    /// Proven lower bound on the misclassification count.
    pub mip_bound: usize,
    pub mip_nodes: usize,
    pub lp2_margin: f64,
    /// Misclassified training alternatives of this stage under the fitted pair.
    pub training_errors: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityPair {
    pub stage: usize,
    pub utilities_k: Vec<PiecewiseUtility>,
    pub utilities_not_k: Vec<PiecewiseUtility>,
    pub diagnostics: StageDiagnostics,
}

impl UtilityPair {
    pub fn side(&self, side: Side) -> &[PiecewiseUtility] {
        match side {
            Side::K => &self.utilities_k,
            Side::NotK => &self.utilities_not_k,
        }
    }

    pub fn weights(&self, side: Side) -> Vec<f64> {
        self.side(side).iter().map(PiecewiseUtility::weight).collect()
    }

    /// True when the stage claims the alternative for its category.
    pub fn claims(&self, g: &[f64], rule: TieRule) -> bool {
        let diff = global_utility(self, Side::K, g) - global_utility(self, Side::NotK, g);
        match rule {
            TieRule::Riskier => diff > TIE_TOLERANCE,
            TieRule::Healthier => diff >= -TIE_TOLERANCE,
        }
    }
}

/// Sum of the marginal utilities of one side at `g`.
pub fn global_utility(pair: &UtilityPair, side: Side, g: &[f64]) -> f64 {
    pair.side(side).iter().zip(g).map(|(u, &x)| u.eval(x)).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightRow {
    pub criterion: String,
    pub h_k_percent: f64,
    pub h_not_k_percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageWeights {
    pub stage: usize,
    pub rows: Vec<WeightRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MhdisModel {
    /// Category names, healthiest first.
    pub categories: Vec<String>,
    pub criteria: Vec<String>,
    pub config: MhdisConfig,
    pub stages: Vec<UtilityPair>,
    /// Set when a stage could not be fitted because one side was empty.
    pub truncated: Option<String>,
    /// Counts of (true category, predicted category) on the training data.
    pub training_confusion: Vec<Vec<usize>>,
    pub weights: Vec<StageWeights>,
}

impl MhdisModel {
    pub fn diagnostics(&self) -> Vec<&StageDiagnostics> {
        self.stages.iter().map(|s| &s.diagnostics).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Invalid(format!("model JSON: {e}")))
    }
}

/// Category index for `g`: the first stage that claims it, else the last
/// category.
pub fn classify(model: &MhdisModel, g: &[f64]) -> usize {
    for (k, stage) in model.stages.iter().enumerate() {
        if stage.claims(g, model.config.tie_rule) {
            return k;
        }
    }
    model.categories.len() - 1
}

/// Two-class shorthand for [`classify`].
pub fn classify_class(model: &MhdisModel, g: &[f64]) -> Class {
    Class::from_index(classify(model, g).min(1))
}

/// Equal-width breakpoints over the observed range of each criterion.
fn breakpoint_grid(rows: &[&[f64]], n_criteria: usize, intervals: usize) -> Vec<Vec<f64>> {
    (0..n_criteria)
        .map(|i| {
            let lo = rows.iter().map(|r| r[i]).fold(f64::INFINITY, f64::min);
            let hi = rows.iter().map(|r| r[i]).fold(f64::NEG_INFINITY, f64::max);
            let mut b: Vec<f64> = (0..=intervals).map(|k| lo + (hi - lo) * k as f64 / intervals as f64).collect();
            b[intervals] = hi;
            b
        })
        .collect()
}

/// Fraction of each subinterval covered by `g`.
fn coverage(b: &[f64], g: f64) -> impl Iterator<Item = f64> + '_ {
    b.windows(2).map(move |w| {
        let width = w[1] - w[0];
        if width <= 0.0 {
            0.0
        } else {
            ((g - w[0]) / width).clamp(0.0, 1.0)
        }
    })
}

/// Column layout shared by the three programs: increments of U_k, then of
/// U_~k, then the program-specific extra columns.
struct Layout {
    n_criteria: usize,
    intervals: usize,
}

impl Layout {
    fn n_increments(&self) -> usize {
        2 * self.n_criteria * self.intervals
    }

    fn col(&self, side: usize, criterion: usize, k: usize) -> usize {
        side * self.n_criteria * self.intervals + criterion * self.intervals + k
    }
}

struct StageProblem<'a> {
    layout: Layout,
    grid: Vec<Vec<f64>>,
    /// Coefficients of the signed utility difference per alternative, sized to
    /// the increment columns.
    diffs: Vec<Vec<f64>>,
    flat: Vec<bool>,
    cfg: &'a MhdisConfig,
}

impl<'a> StageProblem<'a> {
    fn new(rows: &[&[f64]], in_group: &[bool], cfg: &'a MhdisConfig) -> Self {
        let n_criteria = rows[0].len();
        let layout = Layout { n_criteria, intervals: cfg.breakpoints };
        let grid = breakpoint_grid(rows, n_criteria, cfg.breakpoints);
        let flat = grid.iter().map(|b| b[b.len() - 1] <= b[0]).collect();
        let diffs = rows
            .iter()
            .zip(in_group)
            .map(|(g, &member)| {
                let sign = if member { 1.0 } else { -1.0 };
                let mut c = vec![0.0; layout.n_increments()];
                for i in 0..n_criteria {
                    for (k, f) in coverage(&grid[i], g[i]).enumerate() {
                        c[layout.col(0, i, k)] = sign * f;
                        c[layout.col(1, i, k)] = -sign * f;
                    }
                }
                c
            })
            .collect();
        Self { layout, grid, diffs, flat, cfg }
    }

    /// Program skeleton over `extra` additional columns: increment bounds and
    /// the two normalization rows.
    fn skeleton(&self, sense: Sense, extra: usize) -> LinearProgram {
        let ni = self.layout.n_increments();
        let mut lp = LinearProgram::new(sense, vec![0.0; ni + extra]);
        for side in 0..2 {
            let mut row = vec![0.0; ni + extra];
            for i in 0..self.layout.n_criteria {
                for k in 0..self.layout.intervals {
                    let j = self.layout.col(side, i, k);
                    if self.flat[i] {
                        lp.set_bounds(j, 0.0, 0.0);
                    } else {
                        row[j] = 1.0;
                    }
                }
            }
            lp.add_row(row, Relation::Eq, 1.0);
        }
        lp
    }

    fn diff_row(&self, r: usize, extra: usize) -> Vec<f64> {
        let mut row = self.diffs[r].clone();
        row.resize(self.layout.n_increments() + extra, 0.0);
        row
    }

    fn solve(&self, lp: &LinearProgram) -> Result<Vec<f64>> {
        let s = solve_lp(lp, &self.cfg.solver)?;
        expect_optimal(s.status)?;
        Ok(s.values)
    }

    /// LP1: error slacks, one per alternative.
    fn lp1(&self) -> Result<(f64, Vec<f64>)> {
        let n = self.diffs.len();
        let ni = self.layout.n_increments();
        let mut lp = self.skeleton(Sense::Min, n);
        for r in 0..n {
            let mut row = self.diff_row(r, n);
            row[ni + r] = 1.0;
            lp.add_row(row, Relation::Ge, self.cfg.delta);
            lp.objective[ni + r] = 1.0;
        }
        let x = self.solve(&lp)?;
        let errors = x[ni..].iter().map(|&e| e.max(0.0)).collect::<Vec<_>>();
        Ok((errors.iter().sum(), errors))
    }

    /// Program over the alternatives not in `dropped`: rows in `soft` carry an
    /// error slack (minimized), the others must reach δ.
    fn restricted(&self, dropped: &[bool], soft: &[usize]) -> LinearProgram {
        let n = self.diffs.len();
        let ni = self.layout.n_increments();
        let m = soft.len();
        let mut lp = self.skeleton(Sense::Min, m);
        let mut slot = vec![None; n];
        for (s, &r) in soft.iter().enumerate() {
            slot[r] = Some(s);
            lp.objective[ni + s] = 1.0;
        }
        for r in (0..n).filter(|&r| !dropped[r]) {
            let mut row = self.diff_row(r, m);
            if let Some(s) = slot[r] {
                row[ni + s] = 1.0;
            }
            lp.add_row(row, Relation::Ge, self.cfg.delta);
        }
        lp
    }

    /// Greedy feasible classification: repeatedly give up the candidate with
    /// the largest error until the rest separate, then take back any given-up
    /// alternative that still fits. Returns the flags and a point of the
    /// increments meeting every kept row.
    fn greedy(&self, candidates: &[usize]) -> Result<Option<(Vec<bool>, Vec<f64>)>> {
        let n = self.diffs.len();
        let ni = self.layout.n_increments();
        let mut dropped = vec![false; n];
        loop {
            let soft: Vec<usize> = candidates.iter().copied().filter(|&r| !dropped[r]).collect();
            let sol = solve_lp(&self.restricted(&dropped, &soft), &self.cfg.solver)?;
            if sol.status != Status::Optimal {
                return Ok(None);
            }
            let worst = soft.iter().enumerate().map(|(s, &r)| (r, sol.values[ni + s])).fold(
                None,
                |acc: Option<(usize, f64)>, (r, e)| match acc {
                    Some((_, best)) if best >= e => acc,
                    _ => Some((r, e)),
                },
            );
            match worst {
                Some((r, e)) if e > self.cfg.error_tolerance => dropped[r] = true,
                _ => break,
            }
        }
        for &r in candidates {
            if dropped[r] {
                dropped[r] = false;
                let sol = solve_lp(&self.restricted(&dropped, &[]), &self.cfg.solver)?;
                if sol.status != Status::Optimal {
                    dropped[r] = true;
                }
            }
        }
        let sol = solve_lp(&self.restricted(&dropped, &[]), &self.cfg.solver)?;
        if sol.status != Status::Optimal {
            return Ok(None);
        }
        Ok(Some((dropped, sol.values)))
    }

    /// Mixed-binary program over the LP1-misclassified `candidates`; binaries
    /// follow the order of `candidates`.
    fn mip(&self, candidates: &[usize]) -> Result<MipOutcome> {
        let n = self.diffs.len();
        let mut out = MipOutcome { wrong: vec![false; n], proven_optimal: true, bound: 0, nodes: 0 };
        if candidates.is_empty() {
            return Ok(out);
        }
        let ni = self.layout.n_increments();
        let m = candidates.len();
        let mut lp = self.skeleton(Sense::Min, m);
        let mut slot = vec![None; n];
        for (s, &r) in candidates.iter().enumerate() {
            slot[r] = Some(s);
        }
        for r in 0..n {
            let mut row = self.diff_row(r, m);
            if let Some(s) = slot[r] {
                row[ni + s] = self.cfg.big_m();
            }
            lp.add_row(row, Relation::Ge, self.cfg.delta);
        }
        for s in 0..m {
            lp.objective[ni + s] = 1.0;
            lp.set_bounds(ni + s, 0.0, 1.0);
        }
        let incumbent = self.greedy(candidates)?.map(|(dropped, x)| {
            let mut point = x[..ni].to_vec();
            point.extend(candidates.iter().map(|&r| if dropped[r] { 1.0 } else { 0.0 }));
            point
        });
        let program = MixedBinaryProgram { lp, binaries: (ni..ni + m).collect() };
        let tol = Tolerances { max_nodes: self.cfg.mip_node_limit, ..self.cfg.solver };
        let opts = MipOptions { incumbent, stop_at_node_limit: true };
        let report = solve_mip_with(&program, &tol, &opts)?;
        expect_optimal(report.solution.status)?;
        for (s, &r) in candidates.iter().enumerate() {
            out.wrong[r] = report.solution.values[ni + s] > 0.5;
        }
        out.proven_optimal = report.proven_optimal;
        out.bound = report.bound.round().max(0.0) as usize;
        out.nodes = report.nodes;
        Ok(out)
    }

    /// LP2 margin maximization over the alternatives not flagged `wrong`.
    /// Returns the increments and the smallest margin.
    fn lp2(&self, wrong: &[bool]) -> Result<(Vec<f64>, f64)> {
        let ni = self.layout.n_increments();
        let keep: Vec<usize> = (0..self.diffs.len()).filter(|&r| !wrong[r]).collect();
        let mut total = vec![0.0; ni + 1];
        for &r in &keep {
            for (t, c) in total.iter_mut().zip(&self.diffs[r]) {
                *t += c;
            }
        }
        let x = match self.cfg.lp2 {
            Lp2Objective::MinMargin => {
                let mut lp = self.skeleton(Sense::Max, 1);
                for &r in &keep {
                    let mut row = self.diff_row(r, 1);
                    row[ni] = -1.0;
                    lp.add_row(row, Relation::Ge, 0.0);
                }
                lp.objective[ni] = 1.0;
                lp.set_bounds(ni, 0.0, 2.0);
                let first = self.solve(&lp)?;
                let d = first[ni];
                lp.set_bounds(ni, (d - 1e-9 * (1.0 + d)).max(0.0), 2.0);
                lp.objective = total;
                self.solve(&lp).unwrap_or(first)
            }
            Lp2Objective::SumMargins => {
                let mut lp = self.skeleton(Sense::Max, 1);
                for &r in &keep {
                    lp.add_row(self.diff_row(r, 1), Relation::Ge, self.cfg.delta);
                }
                lp.objective = total;
                self.solve(&lp)?
            }
        };
        let inc = x[..ni].to_vec();
        let margin = keep.iter().map(|&r| dot(&self.diffs[r], &inc)).fold(f64::INFINITY, f64::min);
        Ok((inc, if keep.is_empty() { 0.0 } else { margin }))
    }

    fn utilities(&self, inc: &[f64], criteria: &[String]) -> [Vec<PiecewiseUtility>; 2] {
        let mut clean: Vec<f64> = inc.iter().map(|&w| w.max(0.0)).collect();
        let per_side = self.layout.n_criteria * self.layout.intervals;
        for side in clean.chunks_mut(per_side) {
            let total: f64 = side.iter().sum();
            if total > 0.0 {
                side.iter_mut().for_each(|w| *w /= total);
            }
        }
        let build = |side: usize| {
            (0..self.layout.n_criteria)
                .map(|i| {
                    let mut values = Vec::with_capacity(self.layout.intervals + 1);
                    let mut acc = 0.0;
                    values.push(0.0);
                    for k in 0..self.layout.intervals {
                        acc += clean[self.layout.col(side, i, k)];
                        values.push(acc);
                    }
                    PiecewiseUtility { criterion: criteria[i].clone(), breakpoints: self.grid[i].clone(), values }
                })
                .collect()
        };
        [build(0), build(1)]
    }
}

struct MipOutcome {
    wrong: Vec<bool>,
    proven_optimal: bool,
    bound: usize,
    nodes: usize,
}

fn expect_optimal(status: Status) -> Result<()> {
    match status {
        Status::Optimal => Ok(()),
        other => Err(Error::Solver(SolverError::Numerical(format!("stage program is {other:?}")))),
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Fits one stage: `in_group[r]` marks membership of the stage's category.
pub fn fit_stage(
    stage: usize,
    criteria: &[String],
    rows: &[&[f64]],
    in_group: &[bool],
    cfg: &MhdisConfig,
) -> Result<UtilityPair> {
    cfg.validate()?;
    if rows.len() != in_group.len() {
        return Err(Error::LengthMismatch(rows.len(), in_group.len()));
    }
    if let Some(r) = rows.iter().find(|r| r.len() != criteria.len()) {
        return Err(Error::LengthMismatch(r.len(), criteria.len()));
    }
    let n_group = in_group.iter().filter(|&&m| m).count();
    let n_rest = rows.len() - n_group;
    if n_group == 0 || n_rest == 0 {
        return Err(Error::DegenerateGroups(format!(
            "stage {stage} has {n_group} alternatives in the category and {n_rest} riskier"
        )));
    }
    let problem = StageProblem::new(rows, in_group, cfg);
    if problem.flat.iter().all(|&f| f) {
        return Err(Error::DegenerateGroups(format!("every criterion is constant in the stage {stage} training data")));
    }
    let (lp1_error, errors) = problem.lp1()?;
    let mut candidates: Vec<usize> = (0..rows.len()).filter(|&r| errors[r] > cfg.error_tolerance).collect();
    let lp1_misclassified = candidates.len();
    if cfg.mip_scope == MipScope::All {
        candidates = (0..rows.len()).collect();
    }
    // Largest errors first, so branching starts from the likeliest misfits.
    candidates.sort_by(|&a, &b| errors[b].total_cmp(&errors[a]).then(a.cmp(&b)));
    let mip = match problem.mip(&candidates) {
        Ok(w) => w,
        // Hard rows for LP1-correct alternatives can turn infeasible when their
        // slack sat just under the tolerance; retry with binaries everywhere.
        Err(Error::Solver(SolverError::Numerical(_))) => {
            let all: Vec<usize> = (0..rows.len()).collect();
            problem.mip(&all)?
        }
        Err(e) => return Err(e),
    };
    let mip_misclassified = mip.wrong.iter().filter(|&&w| w).count();
    let (inc, lp2_margin) = problem.lp2(&mip.wrong)?;
    let [utilities_k, utilities_not_k] = problem.utilities(&inc, criteria);
    let mut pair = UtilityPair {
        stage,
        utilities_k,
        utilities_not_k,
        diagnostics: StageDiagnostics {
            stage,
            n_alternatives: rows.len(),
            n_group,
            n_rest,
            lp1_error,
            lp1_misclassified,
            mip_misclassified,
            mip_proven_optimal: mip.proven_optimal,
            mip_bound: mip.bound,
            mip_nodes: mip.nodes,
            lp2_margin,
            training_errors: 0,
        },
    };
    pair.diagnostics.training_errors =
        rows.iter().zip(in_group).filter(|(g, &m)| pair.claims(g, cfg.tie_rule) != m).count();
    Ok(pair)
}

/// Fits the full hierarchy. `categories[r]` is the index (0 = healthiest) of
/// row `r` among `names`.
pub fn fit_hierarchy(
    criteria: &[String],
    rows: &[Vec<f64>],
    categories: &[usize],
    names: &[String],
    cfg: &MhdisConfig,
) -> Result<MhdisModel> {
    cfg.validate()?;
    let p = names.len();
    if p < 2 {
        return Err(Error::Invalid("at least two categories are required".into()));
    }
    if rows.len() != categories.len() {
        return Err(Error::LengthMismatch(rows.len(), categories.len()));
    }
    if let Some(&c) = categories.iter().find(|&&c| c >= p) {
        return Err(Error::Invalid(format!("category index {c} out of range")));
    }
    for (c, name) in names.iter().enumerate() {
        if !categories.contains(&c) {
            return Err(Error::DegenerateGroups(format!("category {name} has no training alternatives")));
        }
    }
    let mut model = MhdisModel {
        categories: names.to_vec(),
        criteria: criteria.to_vec(),
        config: *cfg,
        stages: Vec::new(),
        truncated: None,
        training_confusion: vec![vec![0; p]; p],
        weights: Vec::new(),
    };
    let mut remaining: Vec<usize> = (0..rows.len()).collect();
    for k in 0..p - 1 {
        // Alternatives of healthier categories that earlier stages missed stay
        // on the healthy side.
        let in_group: Vec<bool> = remaining.iter().map(|&r| categories[r] <= k).collect();
        let n_group = in_group.iter().filter(|&&m| m).count();
        if n_group == 0 || n_group == remaining.len() {
            model.truncated = Some(format!(
                "stage {} stopped: {} of {} remaining alternatives belong to C_1..C_{}",
                k + 1,
                n_group,
                remaining.len(),
                k + 1
            ));
            break;
        }
        let stage_rows: Vec<&[f64]> = remaining.iter().map(|&r| rows[r].as_slice()).collect();
        let pair = fit_stage(k + 1, criteria, &stage_rows, &in_group, cfg)?;
        remaining.retain(|&r| !pair.claims(&rows[r], cfg.tie_rule));
        model.stages.push(pair);
    }
    let mut confusion = vec![vec![0; p]; p];
    for (g, &c) in rows.iter().zip(categories) {
        confusion[c][classify(&model, g)] += 1;
    }
    model.training_confusion = confusion;
    model.weights = model
        .stages
        .iter()
        .map(|s| StageWeights {
            stage: s.stage,
            rows: criteria
                .iter()
                .enumerate()
                .map(|(i, c)| WeightRow {
                    criterion: c.clone(),
                    h_k_percent: 100.0 * s.utilities_k[i].weight(),
                    h_not_k_percent: 100.0 * s.utilities_not_k[i].weight(),
                })
                .collect(),
        })
        .collect();
    Ok(model)
}

/// Two-class fit on a performance matrix (C1 = active, C2 = inactive).
pub fn fit(train: &PerformanceMatrix, cfg: &MhdisConfig) -> Result<MhdisModel> {
    let categories: Vec<usize> = train.labels.iter().map(|c| c.index()).collect();
    fit_hierarchy(&train.criteria, &train.rows, &categories, &[Class::C1.to_string(), Class::C2.to_string()], cfg)
}

/// Predicted class of every row of `m`.
pub fn predict(model: &MhdisModel, m: &PerformanceMatrix) -> Result<Vec<Class>> {
    if m.criteria != model.criteria {
        return Err(Error::Invalid(format!(
            "matrix criteria {:?} do not match model criteria {:?}",
            m.criteria, model.criteria
        )));
    }
    Ok(m.rows.iter().map(|g| classify_class(model, g)).collect())
}
