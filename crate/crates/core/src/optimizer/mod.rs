//! Dense linear and mixed-binary programming.
//!
//! The M.H.DIS cascade only ever produces small programs (a few hundred rows
//! and columns), so the solver keeps a dense bounded-variable tableau. Linear
//! programs are solved with a two-phase primal simplex; the branch-and-bound
//! search for binary programs reoptimizes child nodes with a dual simplex
//! started from the parent's optimal basis.

mod mip;
mod simplex;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use mip::{solve_mip, solve_mip_with, MipOptions, MipReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Min,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "=")]
    Eq,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

/// `sense objective·x` subject to the rows and `lo ≤ x ≤ hi`.
///
/// Lower bounds must be finite; upper bounds may be `f64::INFINITY`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearProgram {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub rows: Vec<Constraint>,
    pub bounds: Vec<(f64, f64)>,
}

impl LinearProgram {
    /// Empty program over `n` nonnegative variables.
    pub fn new(sense: Sense, objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self { sense, objective, rows: Vec::new(), bounds: vec![(0.0, f64::INFINITY); n] }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_row(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) {
        self.rows.push(Constraint { coeffs, relation, rhs });
    }

    pub fn set_bounds(&mut self, var: usize, lo: f64, hi: f64) {
        self.bounds[var] = (lo, hi);
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let n = self.num_vars();
        if self.bounds.len() != n {
            return Err(SolverError::Malformed(format!("{} bounds for {} variables", self.bounds.len(), n)));
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.coeffs.len() != n {
                return Err(SolverError::Malformed(format!(
                    "row {i} has {} coefficients, expected {n}",
                    row.coeffs.len()
                )));
            }
            if !row.rhs.is_finite() || row.coeffs.iter().any(|c| !c.is_finite()) {
                return Err(SolverError::Malformed(format!("row {i} is not finite")));
            }
        }
        for (j, &(lo, hi)) in self.bounds.iter().enumerate() {
            if !lo.is_finite() || hi.is_nan() || hi < lo {
                return Err(SolverError::Malformed(format!("variable {j} has invalid bounds [{lo}, {hi}]")));
            }
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(SolverError::Malformed("objective is not finite".into()));
        }
        Ok(())
    }

    /// Largest violation of any row or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for row in &self.rows {
            let lhs: f64 = row.coeffs.iter().zip(x).map(|(a, v)| a * v).sum();
            let v = match row.relation {
                Relation::Le => lhs - row.rhs,
                Relation::Ge => row.rhs - lhs,
                Relation::Eq => (lhs - row.rhs).abs(),
            };
            worst = worst.max(v);
        }
        for (&(lo, hi), &v) in self.bounds.iter().zip(x) {
            worst = worst.max(lo - v).max(v - hi);
        }
        worst
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Renders the program in a CPLEX-like text format for cross-checking with
    /// external solvers. Binary variables are listed in a `Binary` section.
    pub fn to_lp_text(&self, binaries: &[usize]) -> String {
        fn term(out: &mut String, coef: f64, j: usize, first: bool) {
            if coef == 0.0 {
                return;
            }
            let sign = if coef < 0.0 {
                " -"
            } else if first {
                ""
            } else {
                " +"
            };
            let _ = write!(out, "{sign} {} x{j}", coef.abs());
        }
        let mut out = String::new();
        out.push_str(match self.sense {
            Sense::Min => "Minimize\n obj:",
            Sense::Max => "Maximize\n obj:",
        });
        let mut first = true;
        for (j, &c) in self.objective.iter().enumerate() {
            if c != 0.0 {
                term(&mut out, c, j, first);
                first = false;
            }
        }
        if first {
            out.push_str(" 0 x0");
        }
        out.push_str("\nSubject To\n");
        for (i, row) in self.rows.iter().enumerate() {
            let _ = write!(out, " c{i}:");
            let mut first = true;
            for (j, &a) in row.coeffs.iter().enumerate() {
                if a != 0.0 {
                    term(&mut out, a, j, first);
                    first = false;
                }
            }
            if first {
                out.push_str(" 0 x0");
            }
            let rel = match row.relation {
                Relation::Le => "<=",
                Relation::Ge => ">=",
                Relation::Eq => "=",
            };
            let _ = writeln!(out, " {rel} {}", row.rhs);
        }
        out.push_str("Bounds\n");
        for (j, &(lo, hi)) in self.bounds.iter().enumerate() {
            if hi.is_infinite() {
                let _ = writeln!(out, " x{j} >= {lo}");
            } else {
                let _ = writeln!(out, " {lo} <= x{j} <= {hi}");
            }
        }
        if !binaries.is_empty() {
            out.push_str("Binary\n");
            for j in binaries {
                let _ = writeln!(out, " x{j}");
            }
        }
        out.push_str("End\n");
        out
    }
}

/// A linear program with a subset of variables restricted to {0, 1}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedBinaryProgram {
    pub lp: LinearProgram,
    pub binaries: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub status: Status,
    pub values: Vec<f64>,
    pub objective: f64,
}

impl Solution {
    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }

    fn without_point(status: Status, n: usize) -> Self {
        Self { status, values: vec![f64::NAN; n], objective: f64::NAN }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub feasibility: f64,
    pub optimality: f64,
    pub integrality: f64,
    /// Smallest tableau entry accepted as a pivot.
    pub pivot: f64,
    pub max_pivots: usize,
    pub max_nodes: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            feasibility: 1e-9,
            optimality: 1e-9,
            integrality: 1e-6,
            pivot: 1e-10,
            max_pivots: 50_000,
            max_nodes: 200_000,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("malformed program: {0}")]
    Malformed(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("pivot limit of {0} exceeded")]
    PivotLimit(usize),
    #[error("branch-and-bound node limit of {0} exceeded")]
    NodeLimit(usize),
}

/// Solves a linear program to an optimal basic solution, or reports it
/// infeasible or unbounded.
pub fn solve_lp(p: &LinearProgram, tol: &Tolerances) -> Result<Solution, SolverError> {
    p.validate()?;
    let n = p.num_vars();
    let mut tab = simplex::Tableau::build(p, tol)?;
    match tab.solve_two_phase()? {
        simplex::Outcome::Optimal => {}
        simplex::Outcome::Infeasible => return Ok(Solution::without_point(Status::Infeasible, n)),
        simplex::Outcome::Unbounded => return Ok(Solution::without_point(Status::Unbounded, n)),
    }
    let values = tab.structural_values();
    check_point(p, &values, tol)?;
    Ok(Solution { status: Status::Optimal, objective: p.objective_value(&values), values })
}

fn check_point(p: &LinearProgram, x: &[f64], tol: &Tolerances) -> Result<(), SolverError> {
    let scale = 1.0 + p.rows.iter().map(|r| r.rhs.abs()).fold(0.0f64, f64::max);
    let viol = p.max_violation(x);
    if viol > 1e3 * tol.feasibility * scale {
        return Err(SolverError::Numerical(format!("returned point violates constraints by {viol:e}")));
    }
    Ok(())
}
