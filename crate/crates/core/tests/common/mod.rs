//! Independent oracles shared by the integration and acceptance suites.
#![allow(dead_code)]

use mhdis_core::dataset::{Class, Direction, PerformanceMatrix, SizeStratum};
use mhdis_core::optimizer::{LinearProgram, MixedBinaryProgram, Relation, Sense};
use mhdis_core::promethee::{PreferenceFunctionKind, Thresholds};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Solves the square system by Gaussian elimination with partial pivoting.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// Optimum of a box-bounded LP by enumerating every basic point: each choice
/// of `n` tight hyperplanes among rows and bounds. `None` means infeasible.
pub fn vertex_enumeration(p: &LinearProgram) -> Option<f64> {
    let n = p.num_vars();
    let mut planes: Vec<(Vec<f64>, f64)> = p.rows.iter().map(|r| (r.coeffs.clone(), r.rhs)).collect();
    for (j, &(lo, hi)) in p.bounds.iter().enumerate() {
        assert!(hi.is_finite(), "oracle needs a bounded box");
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        planes.push((e.clone(), lo));
        planes.push((e, hi));
    }
    let mut best: Option<f64> = None;
    for subset in combinations(planes.len(), n) {
        let a: Vec<Vec<f64>> = subset.iter().map(|&i| planes[i].0.clone()).collect();
        let b: Vec<f64> = subset.iter().map(|&i| planes[i].1).collect();
        let Some(x) = solve_dense(a, b) else { continue };
        if p.max_violation(&x) > 1e-9 {
            continue;
        }
        let v = p.objective_value(&x);
        best = Some(match (best, p.sense) {
            (None, _) => v,
            (Some(b), Sense::Max) => b.max(v),
            (Some(b), Sense::Min) => b.min(v),
        });
    }
    best
}

/// Random 5-variable box-bounded LP with mixed row relations.
pub fn random_lp(rng: &mut impl Rng, n: usize, m: usize) -> LinearProgram {
    let sense = if rng.random_bool(0.5) { Sense::Max } else { Sense::Min };
    let objective: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut p = LinearProgram::new(sense, objective);
    for j in 0..n {
        p.set_bounds(j, 0.0, rng.random_range(1.0..10.0));
    }
    let x0: Vec<f64> = p.bounds.iter().map(|&(_, hi)| rng.random_range(0.0..hi)).collect();
    for i in 0..m {
        let coeffs: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let act: f64 = coeffs.iter().zip(&x0).map(|(a, x)| a * x).sum();
        // Mostly feasible around x0; an occasional row pushes the other way.
        let slack = rng.random_range(-0.5..2.0);
        let (rel, rhs) = match i % 3 {
            0 | 1 if rng.random_bool(0.5) => (Relation::Le, act + slack),
            0 | 1 => (Relation::Ge, act - slack),
            _ if rng.random_bool(0.2) => (Relation::Eq, act),
            _ => (Relation::Le, act + slack),
        };
        p.add_row(coeffs, rel, rhs);
    }
    p
}

/// Optimum of a pure-binary program by trying all assignments.
pub fn exhaustive_binary(p: &MixedBinaryProgram) -> Option<f64> {
    let n = p.lp.num_vars();
    assert_eq!(p.binaries.len(), n, "oracle handles pure binary programs");
    let mut best: Option<f64> = None;
    for mask in 0u32..(1 << n) {
        let x: Vec<f64> = (0..n).map(|j| ((mask >> j) & 1) as f64).collect();
        if p.lp.max_violation(&x) > 1e-12 {
            continue;
        }
        let v = p.lp.objective_value(&x);
        best = Some(match (best, p.lp.sense) {
            (None, _) => v,
            (Some(b), Sense::Max) => b.max(v),
            (Some(b), Sense::Min) => b.min(v),
        });
    }
    best
}

/// Random pure-binary program with integer data so optima compare exactly.
pub fn random_binary_program(rng: &mut impl Rng, n: usize, m: usize) -> MixedBinaryProgram {
    let sense = if rng.random_bool(0.5) { Sense::Max } else { Sense::Min };
    let objective: Vec<f64> = (0..n).map(|_| rng.random_range(-9..=9) as f64).collect();
    let mut lp = LinearProgram::new(sense, objective);
    for j in 0..n {
        lp.set_bounds(j, 0.0, 1.0);
    }
    for _ in 0..m {
        let coeffs: Vec<f64> = (0..n).map(|_| rng.random_range(-3..=6) as f64).collect();
        let total: f64 = coeffs.iter().filter(|c| **c > 0.0).sum();
        let rhs = (total * rng.random_range(0.2..0.7)).round();
        if rng.random_bool(0.8) {
            lp.add_row(coeffs, Relation::Le, rhs);
        } else {
            lp.add_row(coeffs, Relation::Ge, (rhs * 0.3).round());
        }
    }
    MixedBinaryProgram { lp, binaries: (0..n).collect() }
}

/// Student-t two-sided p-value by Simpson quadrature of the density.
pub fn t_two_sided_p_quadrature(t: f64, df: f64) -> f64 {
    let ln_norm = ln_gamma((df + 1.0) / 2.0) - ln_gamma(df / 2.0) - 0.5 * (df * std::f64::consts::PI).ln();
    let pdf = |x: f64| (ln_norm - (df + 1.0) / 2.0 * (1.0 + x * x / df).ln()).exp();
    let a = t.abs();
    let steps = 200_000;
    let h = a / steps as f64;
    let mut s = pdf(0.0) + pdf(a);
    for k in 1..steps {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * pdf(k as f64 * h);
    }
    let central = s * h / 3.0; // ∫_0^|t|
    (1.0 - 2.0 * central).clamp(0.0, 1.0)
}

/// Lanczos approximation of ln Γ(x), x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = C[0];
    let t = x + G + 0.5;
    for (i, &c) in C.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Year-1 matrix over criteria g0.. with increasing directions.
pub fn matrix(rows: Vec<Vec<f64>>, labels: Vec<Class>) -> PerformanceMatrix {
    let n = rows.first().map_or(0, Vec::len);
    PerformanceMatrix {
        year: 1,
        criteria: (0..n).map(|i| format!("g{i}")).collect(),
        directions: vec![Direction::Increasing; n],
        company_ids: (0..rows.len()).map(|j| format!("A{j:03}")).collect(),
        labels,
        strata: vec![SizeStratum::Large; rows.len()],
        rows,
    }
}

pub fn criterion_names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("g{i}")).collect()
}

/// Preference degree written out from the textbook definitions.
pub fn preference_oracle(kind: PreferenceFunctionKind, d: f64, r: f64) -> f64 {
    use PreferenceFunctionKind::*;
    if r <= 0.0 || d <= 0.0 {
        return 0.0;
    }
    let q = r / 6.0;
    let p = 4.0 * r / 6.0;
    let s = (q + p) / 2.0;
    match kind {
        Usual => 1.0,
        UShape => (d > q) as u8 as f64,
        VShape => (d / p).min(1.0),
        Level => match d {
            d if d <= q => 0.0,
            d if d <= p => 0.5,
            _ => 1.0,
        },
        Linear => ((d - q) / (p - q)).clamp(0.0, 1.0),
        Gaussian => 1.0 - (-(d * d) / (2.0 * s * s)).exp(),
    }
}

/// Net flows of every alternative for one weight vector, straight from
/// the outranking definition with per-column ranges as thresholds.
pub fn net_flow_oracle(rows: &[Vec<f64>], w: &[f64], kind: PreferenceFunctionKind) -> Vec<f64> {
    let m = rows.len();
    let n = w.len();
    let range: Vec<f64> = (0..n)
        .map(|i| {
            let col = rows.iter().map(|r| r[i]);
            col.clone().fold(f64::NEG_INFINITY, f64::max) - col.fold(f64::INFINITY, f64::min)
        })
        .collect();
    let pi = |a: usize, b: usize| -> f64 {
        (0..n).map(|i| w[i] * preference_oracle(kind, rows[a][i] - rows[b][i], range[i])).sum()
    };
    (0..m).map(|a| (0..m).filter(|&b| b != a).map(|b| pi(a, b) - pi(b, a)).sum::<f64>() / (m - 1) as f64).collect()
}

pub fn thresholds_of(rows: &[Vec<f64>]) -> Vec<Thresholds> {
    let n = rows.first().map_or(0, Vec::len);
    (0..n).map(|i| Thresholds::from_values(&rows.iter().map(|r| r[i]).collect::<Vec<_>>())).collect()
}

/// The end-to-end sweep on the pinned synthetic fixture.
pub fn fixture_sweep(workers: usize) -> mhdis_core::evaluation::SweepResult {
    use mhdis_core::evaluation::{gen_synthetic, run_sweep, SweepConfig, SyntheticConfig, FIXTURE_SEED};
    let ds = gen_synthetic(&SyntheticConfig::fixture()).unwrap();
    let cfg = SweepConfig { seed: FIXTURE_SEED, scenarios: 1_000, workers, ..Default::default() };
    run_sweep(&ds, &cfg).unwrap()
}
