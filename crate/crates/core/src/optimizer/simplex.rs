//! Bounded-variable dense tableau with primal and dual simplex iterations.
//!
//! Columns are laid out as `[structural | row columns]`, where every row owns
//! exactly one unit column: a slack for inequality rows that start feasible,
//! an artificial otherwise. Those unit columns are the initial basis, so the
//! current basis inverse can always be read back from them.

use super::{LinearProgram, Relation, Sense, SolverError, Tolerances};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarState {
    Basic,
    AtLower,
    AtUpper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Outcome {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Consecutive degenerate pivots after which entering selection switches
/// from Dantzig's rule to Bland's rule.
const BLAND_AFTER: usize = 50;

#[derive(Debug, Clone)]
pub(crate) struct Tableau {
    m: usize,
    n_struct: usize,
    n: usize,
    /// Current `B⁻¹A`, row-major `m × n`.
    t: Vec<f64>,
    /// Original constraint matrix (with row columns), row-major `m × n`.
    a: Vec<f64>,
    b: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    x: Vec<f64>,
    basis: Vec<usize>,
    state: Vec<VarState>,
    /// Phase-2 costs, always in minimization form.
    cost: Vec<f64>,
    /// Reduced costs for whichever cost vector is active.
    d: Vec<f64>,
    /// Unit column owned by each row and its sign in the original matrix.
    row_col: Vec<(usize, f64)>,
    artificial: Vec<bool>,
    tol: Tolerances,
    pivots: usize,
}

impl Tableau {
    pub(crate) fn build(p: &LinearProgram, tol: &Tolerances) -> Result<Self, SolverError> {
        let m = p.rows.len();
        let n_struct = p.num_vars();
        let n = n_struct + m;
        let mut lower = Vec::with_capacity(n);
        let mut upper = Vec::with_capacity(n);
        let mut x = Vec::with_capacity(n);
        let mut state = Vec::with_capacity(n);
        for &(lo, hi) in &p.bounds {
            lower.push(lo);
            upper.push(hi);
            x.push(lo);
            state.push(VarState::AtLower);
        }
        let sign = match p.sense {
            Sense::Min => 1.0,
            Sense::Max => -1.0,
        };
        let mut cost: Vec<f64> = p.objective.iter().map(|c| sign * c).collect();
        cost.resize(n, 0.0);

        let mut a = vec![0.0; m * n];
        let mut b = Vec::with_capacity(m);
        let mut row_col = Vec::with_capacity(m);
        let mut artificial = vec![false; n];
        let mut basis = Vec::with_capacity(m);
        for (i, row) in p.rows.iter().enumerate() {
            a[i * n..i * n + n_struct].copy_from_slice(&row.coeffs);
            let activity: f64 = row.coeffs.iter().zip(&x).map(|(c, v)| c * v).sum();
            let resid = row.rhs - activity;
            let col = n_struct + i;
            // A slack can start basic only when the row is already satisfied.
            let (coef, lo, hi, is_art) = match row.relation {
                Relation::Le if resid >= 0.0 => (1.0, 0.0, f64::INFINITY, false),
                Relation::Ge if resid <= 0.0 => (-1.0, 0.0, f64::INFINITY, false),
                _ => (if resid >= 0.0 { 1.0 } else { -1.0 }, 0.0, f64::INFINITY, true),
            };
            a[i * n + col] = coef;
            b.push(row.rhs);
            row_col.push((col, coef));
            artificial[col] = is_art;
            lower.push(lo);
            upper.push(hi);
            x.push(resid * coef);
            state.push(VarState::Basic);
            basis.push(col);
        }
        let mut tab = Self {
            m,
            n_struct,
            n,
            t: a.clone(),
            a,
            b,
            lower,
            upper,
            x,
            basis,
            state,
            cost,
            d: vec![0.0; n],
            row_col,
            artificial,
            tol: *tol,
            pivots: 0,
        };
        tab.add_missing_slacks(p);
        tab.reset_tableau();
        Ok(tab)
    }

    /// Inequality rows whose unit column had to be an artificial still need a
    /// slack so that they can hold with strict inequality.
    fn add_missing_slacks(&mut self, p: &LinearProgram) {
        let extra: Vec<(usize, f64)> = p
            .rows
            .iter()
            .enumerate()
            .filter_map(|(i, row)| {
                let (col, _) = self.row_col[i];
                if !self.artificial[col] {
                    return None;
                }
                match row.relation {
                    Relation::Le => Some((i, 1.0)),
                    Relation::Ge => Some((i, -1.0)),
                    Relation::Eq => None,
                }
            })
            .collect();
        if extra.is_empty() {
            return;
        }
        let old_n = self.n;
        let new_n = old_n + extra.len();
        let mut widened = vec![0.0; self.m * new_n];
        for i in 0..self.m {
            widened[i * new_n..i * new_n + old_n].copy_from_slice(&self.a[i * old_n..(i + 1) * old_n]);
        }
        self.a = widened;
        for (k, &(i, coef)) in extra.iter().enumerate() {
            self.a[i * new_n + old_n + k] = coef;
            self.lower.push(0.0);
            self.upper.push(f64::INFINITY);
            self.x.push(0.0);
            self.state.push(VarState::AtLower);
            self.cost.push(0.0);
            self.artificial.push(false);
        }
        self.n = new_n;
        self.d = vec![0.0; new_n];
    }

    /// Sets `t = B⁻¹A` for the initial basis of signed unit columns.
    fn reset_tableau(&mut self) {
        let n = self.n;
        self.t = self.a.clone();
        for (i, &(_, sign)) in self.row_col.iter().enumerate() {
            if sign < 0.0 {
                for v in &mut self.t[i * n..(i + 1) * n] {
                    *v = -*v;
                }
            }
        }
    }

    pub(crate) fn structural_values(&self) -> Vec<f64> {
        self.x[..self.n_struct].to_vec()
    }

    pub(crate) fn value(&self, j: usize) -> f64 {
        self.x[j]
    }

    /// Objective in the caller's sense.
    pub(crate) fn min_objective(&self) -> f64 {
        self.cost.iter().zip(&self.x).map(|(c, v)| c * v).sum()
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.n + j]
    }

    fn is_fixed(&self, j: usize) -> bool {
        self.upper[j] - self.lower[j] <= 0.0
    }

    fn compute_reduced_costs(&mut self, cost: &[f64]) {
        let n = self.n;
        self.d.copy_from_slice(cost);
        for i in 0..self.m {
            let cb = cost[self.basis[i]];
            if cb == 0.0 {
                continue;
            }
            let row = &self.t[i * n..(i + 1) * n];
            for (dj, &tij) in self.d.iter_mut().zip(row) {
                *dj -= cb * tij;
            }
        }
        for i in 0..self.m {
            self.d[self.basis[i]] = 0.0;
        }
    }

    fn pivot(&mut self, r: usize, q: usize) -> Result<(), SolverError> {
        self.pivots += 1;
        if self.pivots > self.tol.max_pivots {
            return Err(SolverError::PivotLimit(self.tol.max_pivots));
        }
        let n = self.n;
        let piv = self.t[r * n + q];
        if !piv.is_finite() || piv.abs() < self.tol.pivot {
            return Err(SolverError::Numerical(format!("pivot element {piv:e}")));
        }
        let inv = 1.0 / piv;
        for v in &mut self.t[r * n..(r + 1) * n] {
            *v *= inv;
        }
        let (before, rest) = self.t.split_at_mut(r * n);
        let (prow, after) = rest.split_at_mut(n);
        for row in before.chunks_exact_mut(n).chain(after.chunks_exact_mut(n)) {
            let f = row[q];
            if f != 0.0 {
                for (v, &pv) in row.iter_mut().zip(prow.iter()) {
                    *v -= f * pv;
                }
                row[q] = 0.0;
            }
        }
        let f = self.d[q];
        if f != 0.0 {
            for (v, &pv) in self.d.iter_mut().zip(prow.iter()) {
                *v -= f * pv;
            }
        }
        self.d[q] = 0.0;
        let leaving = self.basis[r];
        self.basis[r] = q;
        self.state[q] = VarState::Basic;
        // Caller fixes the leaving variable's state; default to its nearer bound.
        self.state[leaving] =
            if (self.x[leaving] - self.lower[leaving]).abs() <= (self.upper[leaving] - self.x[leaving]).abs() {
                VarState::AtLower
            } else {
                VarState::AtUpper
            };
        Ok(())
    }

    /// Moves nonbasic `q` by `delta`, updating every basic variable.
    fn shift(&mut self, q: usize, delta: f64) {
        if delta == 0.0 {
            return;
        }
        self.x[q] += delta;
        for i in 0..self.m {
            let tiq = self.at(i, q);
            if tiq != 0.0 {
                let bi = self.basis[i];
                self.x[bi] -= tiq * delta;
            }
        }
    }

    /// Primal simplex on the active reduced costs `d` for cost vector `cost`.
    fn primal(&mut self, cost: &[f64]) -> Result<Outcome, SolverError> {
        let opt_tol = self.tol.optimality;
        let feas_tol = self.tol.feasibility;
        let mut degenerate = 0usize;
        let mut refresh_countdown = 200usize;
        loop {
            let bland = degenerate >= BLAND_AFTER;
            // Entering variable.
            let mut enter: Option<(usize, f64)> = None;
            let mut best = 0.0;
            for j in 0..self.n {
                if self.state[j] == VarState::Basic || self.is_fixed(j) {
                    continue;
                }
                let dj = self.d[j];
                let dir = match self.state[j] {
                    VarState::AtLower if dj < -opt_tol => 1.0,
                    VarState::AtUpper if dj > opt_tol => -1.0,
                    _ => continue,
                };
                if bland {
                    enter = Some((j, dir));
                    break;
                }
                if dj.abs() > best {
                    best = dj.abs();
                    enter = Some((j, dir));
                }
            }
            let Some((q, dir)) = enter else {
                return Ok(Outcome::Optimal);
            };

            // Ratio test.
            let mut theta = self.upper[q] - self.lower[q];
            let mut leave: Option<(usize, bool)> = None; // (row, goes_to_upper)
            for i in 0..self.m {
                let alpha = dir * self.at(i, q);
                if alpha.abs() < self.tol.pivot {
                    continue;
                }
                let bi = self.basis[i];
                let (limit, to_upper) = if alpha > 0.0 {
                    ((self.x[bi] - self.lower[bi]).max(0.0) / alpha, false)
                } else {
                    if self.upper[bi].is_infinite() {
                        continue;
                    }
                    ((self.upper[bi] - self.x[bi]).max(0.0) / -alpha, true)
                };
                let better = match leave {
                    _ if limit < theta - feas_tol => true,
                    Some((r, _)) if limit <= theta + feas_tol => {
                        if bland {
                            bi < self.basis[r]
                        } else {
                            // Prefer the larger pivot among near-ties.
                            self.at(i, q).abs() > self.at(r, q).abs()
                        }
                    }
                    _ => false,
                };
                if better {
                    theta = limit;
                    leave = Some((i, to_upper));
                }
            }
            if theta.is_infinite() {
                return Ok(Outcome::Unbounded);
            }
            if theta <= feas_tol {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.shift(q, dir * theta);
            match leave {
                None => {
                    // Bound flip.
                    self.state[q] = if dir > 0.0 {
                        self.x[q] = self.upper[q];
                        VarState::AtUpper
                    } else {
                        self.x[q] = self.lower[q];
                        VarState::AtLower
                    };
                    self.pivots += 1;
                    if self.pivots > self.tol.max_pivots {
                        return Err(SolverError::PivotLimit(self.tol.max_pivots));
                    }
                }
                Some((r, to_upper)) => {
                    let leaving = self.basis[r];
                    self.pivot(r, q)?;
                    if to_upper {
                        self.x[leaving] = self.upper[leaving];
                        self.state[leaving] = VarState::AtUpper;
                    } else {
                        self.x[leaving] = self.lower[leaving];
                        self.state[leaving] = VarState::AtLower;
                    }
                }
            }
            refresh_countdown -= 1;
            if refresh_countdown == 0 {
                refresh_countdown = 200;
                self.refresh()?;
                self.compute_reduced_costs(cost);
            }
        }
    }

    /// Dual simplex; requires the current basis to be dual feasible.
    fn dual(&mut self) -> Result<Outcome, SolverError> {
        let feas_tol = self.tol.feasibility;
        loop {
            // Leaving row: largest bound violation.
            let mut leave: Option<(usize, f64)> = None;
            let mut worst = feas_tol;
            for i in 0..self.m {
                let bi = self.basis[i];
                let v = self.x[bi];
                let viol_lo = self.lower[bi] - v;
                let viol_hi = v - self.upper[bi];
                if viol_lo > worst {
                    worst = viol_lo;
                    leave = Some((i, self.lower[bi]));
                } else if viol_hi > worst {
                    worst = viol_hi;
                    leave = Some((i, self.upper[bi]));
                }
            }
            let Some((r, target)) = leave else {
                return Ok(Outcome::Optimal);
            };
            let br = self.basis[r];
            let increase = self.x[br] < target;
            // Entering column keeping dual feasibility.
            let mut enter: Option<usize> = None;
            let mut best_ratio = f64::INFINITY;
            let mut best_piv = 0.0;
            for j in 0..self.n {
                if self.state[j] == VarState::Basic || self.is_fixed(j) {
                    continue;
                }
                let trj = self.at(r, j);
                if trj.abs() < self.tol.pivot {
                    continue;
                }
                let eligible = match (self.state[j], increase) {
                    (VarState::AtLower, true) => trj < 0.0,
                    (VarState::AtUpper, true) => trj > 0.0,
                    (VarState::AtLower, false) => trj > 0.0,
                    (VarState::AtUpper, false) => trj < 0.0,
                    (VarState::Basic, _) => false,
                };
                if !eligible {
                    continue;
                }
                let ratio = self.d[j].abs() / trj.abs();
                if ratio < best_ratio - 1e-12 || (ratio <= best_ratio + 1e-12 && trj.abs() > best_piv) {
                    best_ratio = ratio;
                    best_piv = trj.abs();
                    enter = Some(j);
                }
            }
            let Some(q) = enter else {
                return Ok(Outcome::Infeasible);
            };
            let delta = (self.x[br] - target) / self.at(r, q);
            self.shift(q, delta);
            self.pivot(r, q)?;
            self.x[br] = target;
            self.state[br] = if target == self.lower[br] { VarState::AtLower } else { VarState::AtUpper };
        }
    }

    /// Recomputes basic values from the original rows, removing drift.
    fn refresh(&mut self) -> Result<(), SolverError> {
        let (m, n) = (self.m, self.n);
        let mut rhs = self.b.clone();
        for j in 0..n {
            if self.state[j] == VarState::Basic {
                continue;
            }
            let xj = self.x[j];
            if xj == 0.0 {
                continue;
            }
            for (i, r) in rhs.iter_mut().enumerate() {
                *r -= self.a[i * n + j] * xj;
            }
        }
        // x_B = B⁻¹ rhs with B⁻¹[:, k] = sign_k · T[:, col_k].
        for i in 0..m {
            let mut v = 0.0;
            for (k, &(col, sign)) in self.row_col.iter().enumerate() {
                v += sign * self.t[i * n + col] * rhs[k];
            }
            if !v.is_finite() {
                return Err(SolverError::Numerical("non-finite basic value".into()));
            }
            self.x[self.basis[i]] = v;
        }
        Ok(())
    }

    pub(crate) fn solve_two_phase(&mut self) -> Result<Outcome, SolverError> {
        let phase1: Vec<f64> = (0..self.n).map(|j| if self.artificial[j] { 1.0 } else { 0.0 }).collect();
        if phase1.iter().any(|&c| c != 0.0) {
            self.compute_reduced_costs(&phase1);
            let out = self.primal(&phase1)?;
            debug_assert_ne!(out, Outcome::Unbounded);
            self.refresh()?;
            let infeas: f64 = (0..self.n).filter(|&j| self.artificial[j]).map(|j| self.x[j].abs()).sum();
            let scale = 1.0 + self.b.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            if infeas > 1e3 * self.tol.feasibility * scale {
                return Ok(Outcome::Infeasible);
            }
            for j in 0..self.n {
                if self.artificial[j] {
                    self.upper[j] = 0.0;
                    if self.state[j] != VarState::Basic {
                        self.x[j] = 0.0;
                        self.state[j] = VarState::AtLower;
                    }
                }
            }
        }
        self.reoptimize_primal()
    }

    fn reoptimize_primal(&mut self) -> Result<Outcome, SolverError> {
        let cost = self.cost.clone();
        self.compute_reduced_costs(&cost);
        let out = self.primal(&cost)?;
        self.refresh()?;
        Ok(out)
    }

    /// Tightens bounds of variable `j` on an optimal tableau and reoptimizes
    /// with the dual simplex, falling back to primal cleanup for drift.
    pub(crate) fn resolve_with_bounds(&mut self, changes: &[(usize, f64, f64)]) -> Result<Outcome, SolverError> {
        for &(j, lo, hi) in changes {
            self.lower[j] = lo;
            self.upper[j] = hi;
            if self.state[j] != VarState::Basic {
                let target = if self.state[j] == VarState::AtUpper && hi.is_finite() { hi } else { lo };
                let delta = target - self.x[j];
                self.shift(j, delta);
                self.x[j] = target;
                self.state[j] = if target == lo { VarState::AtLower } else { VarState::AtUpper };
            }
        }
        // Nonbasic variables must sit at a bound matching their reduced cost
        // sign for the dual simplex; fixed ones always qualify.
        let opt_tol = self.tol.optimality;
        for j in 0..self.n {
            match self.state[j] {
                VarState::AtLower if self.d[j] < -opt_tol && self.upper[j].is_finite() => {
                    let delta = self.upper[j] - self.x[j];
                    self.shift(j, delta);
                    self.x[j] = self.upper[j];
                    self.state[j] = VarState::AtUpper;
                }
                VarState::AtUpper if self.d[j] > opt_tol => {
                    let delta = self.lower[j] - self.x[j];
                    self.shift(j, delta);
                    self.x[j] = self.lower[j];
                    self.state[j] = VarState::AtLower;
                }
                _ => {}
            }
        }
        if self.dual()? == Outcome::Infeasible {
            return Ok(Outcome::Infeasible);
        }
        self.refresh()?;
        // A primal step cleans up any reduced-cost drift.
        let out = self.reoptimize_primal()?;
        if out == Outcome::Optimal && self.max_bound_violation() > 1e3 * self.tol.feasibility {
            // Drift left the basis primal infeasible; one more dual pass.
            if self.dual()? == Outcome::Infeasible {
                return Ok(Outcome::Infeasible);
            }
            self.refresh()?;
            return self.reoptimize_primal();
        }
        Ok(out)
    }

    fn max_bound_violation(&self) -> f64 {
        (0..self.n).map(|j| (self.lower[j] - self.x[j]).max(self.x[j] - self.upper[j])).fold(0.0, f64::max)
    }
}
