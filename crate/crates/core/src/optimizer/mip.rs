//! Best-first branch and bound over binary variables.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::rc::Rc;

use super::simplex::{Outcome, Tableau};
use super::{check_point, MixedBinaryProgram, Sense, Solution, SolverError, Status, Tolerances};

struct Node {
    /// Relaxation value of the parent, in minimization form.
    bound: f64,
    depth: usize,
    seq: usize,
    parent: Rc<Tableau>,
    var: usize,
    value: f64,
}

impl Node {
    fn key(&self) -> (f64, usize, usize) {
        (self.bound, self.depth, self.seq)
    }
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    /// Max-heap order: lowest bound first, then deepest, then oldest.
    fn cmp(&self, other: &Self) -> Ordering {
        let (b1, d1, s1) = self.key();
        let (b2, d2, s2) = other.key();
        b2.total_cmp(&b1).then(d1.cmp(&d2)).then(s2.cmp(&s1))
    }
}

struct Search<'a> {
    p: &'a MixedBinaryProgram,
    tol: Tolerances,
    integral_objective: bool,
    incumbent: Option<(f64, Vec<f64>)>,
    evaluated: usize,
}

impl Search<'_> {
    /// Bound value that must be beaten to be worth exploring.
    fn can_improve(&self, bound: f64) -> bool {
        let Some((best, _)) = &self.incumbent else {
            return true;
        };
        if self.integral_objective {
            (bound - self.tol.integrality).ceil() <= best - 0.5
        } else {
            bound < best - self.tol.optimality * (1.0 + best.abs())
        }
    }

    fn first_fractional(&self, tab: &Tableau) -> Option<(usize, f64)> {
        self.p.binaries.iter().find_map(|&j| {
            let v = tab.value(j);
            let frac = (v - v.round()).abs();
            (frac > self.tol.integrality).then_some((j, v))
        })
    }

    fn offer(&mut self, tab: &Tableau) {
        let obj = tab.min_objective();
        let improves = match &self.incumbent {
            None => true,
            Some((best, _)) => obj < *best - self.tol.optimality * (1.0 + best.abs()),
        };
        if improves {
            let mut x = tab.structural_values();
            for &j in &self.p.binaries {
                x[j] = x[j].round();
            }
            let obj = if self.integral_objective { obj.round() } else { obj };
            self.incumbent = Some((obj, x));
        }
    }

    /// Rounds the relaxation's fractional binaries and reoptimizes the rest.
    fn rounding_heuristic(&mut self, root: &Tableau) -> Result<(), SolverError> {
        for up in [true, false] {
            let changes: Vec<(usize, f64, f64)> = self
                .p
                .binaries
                .iter()
                .filter_map(|&j| {
                    let v = root.value(j);
                    if (v - v.round()).abs() <= self.tol.integrality {
                        return None;
                    }
                    let r = if up { 1.0 } else { v.round() };
                    Some((j, r, r))
                })
                .collect();
            if changes.is_empty() {
                return Ok(());
            }
            let mut tab = root.clone();
            if tab.resolve_with_bounds(&changes)? == Outcome::Optimal && self.first_fractional(&tab).is_none() {
                self.offer(&tab);
            }
        }
        Ok(())
    }
}

/// Options for [`solve_mip_with`].
#[derive(Debug, Clone, Default)]
pub struct MipOptions {
    /// A known feasible point used as the starting incumbent.
    pub incumbent: Option<Vec<f64>>,
    /// Return the incumbent instead of an error when the node limit is hit.
    pub stop_at_node_limit: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MipReport {
    pub solution: Solution,
    /// False only when the search stopped at the node limit.
    pub proven_optimal: bool,
    /// Best proven bound on the optimum, in the program's own sense.
    pub bound: f64,
    pub nodes: usize,
}

/// Solves a mixed-binary program to global optimality.
///
/// Branches on the lowest-index fractional binary and explores nodes in
/// best-bound order. Hitting `tol.max_nodes` is an error rather than a
/// silently suboptimal answer.
pub fn solve_mip(p: &MixedBinaryProgram, tol: &Tolerances) -> Result<Solution, SolverError> {
    solve_mip_with(p, tol, &MipOptions::default()).map(|r| r.solution)
}

fn no_point(status: Status, n: usize, nodes: usize) -> MipReport {
    MipReport {
        solution: Solution { status, values: vec![f64::NAN; n], objective: f64::NAN },
        proven_optimal: true,
        bound: f64::NAN,
        nodes,
    }
}

/// [`solve_mip`] with a warm-start incumbent and an optional early stop. An
/// early stop is reported through `proven_optimal` and `bound`.
pub fn solve_mip_with(p: &MixedBinaryProgram, tol: &Tolerances, opts: &MipOptions) -> Result<MipReport, SolverError> {
    p.lp.validate()?;
    let n = p.lp.num_vars();
    let mut lp = p.lp.clone();
    for &j in &p.binaries {
        if j >= n {
            return Err(SolverError::Malformed(format!("binary index {j} out of range")));
        }
        let (lo, hi) = lp.bounds[j];
        let (lo, hi) = (lo.max(0.0).ceil(), hi.min(1.0).floor());
        if lo > hi {
            return Ok(no_point(Status::Infeasible, n, 0));
        }
        lp.bounds[j] = (lo, hi);
    }
    let is_binary = {
        let mut v = vec![false; n];
        for &j in &p.binaries {
            v[j] = true;
        }
        v
    };
    let integral_objective =
        lp.objective.iter().enumerate().all(|(j, &c)| if is_binary[j] { c == c.round() } else { c == 0.0 });
    let sign = match lp.sense {
        Sense::Min => 1.0,
        Sense::Max => -1.0,
    };

    let mut root = Tableau::build(&lp, tol)?;
    match root.solve_two_phase()? {
        Outcome::Optimal => {}
        Outcome::Infeasible => return Ok(no_point(Status::Infeasible, n, 1)),
        Outcome::Unbounded => return Ok(no_point(Status::Unbounded, n, 1)),
    }

    let mut search = Search { p, tol: *tol, integral_objective, incumbent: None, evaluated: 1 };
    if let Some(x) = &opts.incumbent {
        if x.len() != n || p.binaries.iter().any(|&j| x[j] != 0.0 && x[j] != 1.0) {
            return Err(SolverError::Malformed("initial incumbent is not a binary point".into()));
        }
        check_point(&lp, x, tol).map_err(|_| SolverError::Malformed("initial incumbent is infeasible".into()))?;
        let obj = sign * lp.objective_value(x);
        let obj = if integral_objective { obj.round() } else { obj };
        search.incumbent = Some((obj, x.clone()));
    }
    let mut heap = BinaryHeap::new();
    let mut seq = 0usize;
    let mut push_children = |heap: &mut BinaryHeap<Node>, tab: Rc<Tableau>, depth: usize, j: usize, v: f64| {
        let bound = tab.min_objective();
        // The branch nearer to the relaxation value is explored first.
        let order = if v - v.floor() >= 0.5 { [1.0, 0.0] } else { [0.0, 1.0] };
        for value in order {
            heap.push(Node { bound, depth: depth + 1, seq, parent: Rc::clone(&tab), var: j, value });
            seq += 1;
        }
    };

    let root_bound = root.min_objective();
    match search.first_fractional(&root) {
        None => search.offer(&root),
        Some((j, v)) => {
            search.rounding_heuristic(&root)?;
            push_children(&mut heap, Rc::new(root), 0, j, v);
        }
    }

    let mut stopped = false;
    let mut open_bound = f64::INFINITY;
    while let Some(node) = heap.pop() {
        if !search.can_improve(node.bound) {
            continue;
        }
        if search.evaluated >= tol.max_nodes {
            if !opts.stop_at_node_limit || search.incumbent.is_none() {
                return Err(SolverError::NodeLimit(tol.max_nodes));
            }
            // Best-first order: the popped node carries the smallest open bound.
            open_bound = node.bound.max(root_bound);
            stopped = true;
            break;
        }
        search.evaluated += 1;
        let mut tab = (*node.parent).clone();
        drop(node.parent);
        if tab.resolve_with_bounds(&[(node.var, node.value, node.value)])? != Outcome::Optimal {
            continue;
        }
        let bound = tab.min_objective();
        if !search.can_improve(bound) {
            continue;
        }
        match search.first_fractional(&tab) {
            None => search.offer(&tab),
            Some((j, v)) => push_children(&mut heap, Rc::new(tab), node.depth, j, v),
        }
    }

    let nodes = search.evaluated;
    let Some((best, values)) = search.incumbent else {
        return Ok(no_point(Status::Infeasible, n, nodes));
    };
    check_point(&lp, &values, tol)?;
    let objective = lp.objective_value(&values);
    let objective = if integral_objective { objective.round() } else { objective };
    let bound = if stopped {
        let b = if integral_objective { (open_bound - tol.integrality).ceil() } else { open_bound };
        sign * b.min(best)
    } else {
        objective
    };
    Ok(MipReport {
        solution: Solution { status: Status::Optimal, values, objective },
        proven_optimal: !stopped,
        bound,
        nodes,
    })
}
