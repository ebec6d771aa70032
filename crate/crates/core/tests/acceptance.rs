//! Acceptance checks, one PASS/FAIL line each. Exits nonzero if any fails.

mod common;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use common::{exhaustive_binary, fixture_sweep, matrix, random_binary_program, random_lp, rng, vertex_enumeration};
use mhdis_core::dataset::catalog::{retained_six, CORRELATED, RETAINED};
use mhdis_core::dataset::Class;
use mhdis_core::evaluation::{generate_pairs, metrics, screening_fixture, ConfusionMatrix, Split, SweepResult};
use mhdis_core::mhdis::{fit, predict, MhdisConfig, Side};
use mhdis_core::optimizer::{solve_lp, solve_mip, Status, Tolerances};
use mhdis_core::promethee::{
    flows_at_weights, median_cut, preference_degree, run_promethee, PreferenceFunctionKind, PrometheeConfig, Thresholds,
};
use mhdis_core::sampling::{sample_weights, stratified_allocation, WeightMethod};
use mhdis_core::screening::{run_screening, ScreeningConfig};
use rand::Rng;

const LP_TOL: f64 = 1e-7;
const REL_TOL: f64 = 1e-10;
const FLOW_TOL: f64 = 1e-9;
const MEAN_TOL: f64 = 0.01;
const VAR_REL_TOL: f64 = 0.15;
const SE_FACTOR: f64 = 3.0;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within_time(start: Instant, limit: Duration) -> Result<(), String> {
    let t = start.elapsed();
    check(t < limit, format!("took {t:.2?}, limit {limit:?}"))
}

fn stratified_table() -> Outcome {
    let start = Instant::now();
    let plan = stratified_allocation(&[827, 635, 83, 6], 57).map_err(|e| e.to_string())?;
    let truncated: Vec<f64> = plan.quotas.iter().map(|q| (q * 1000.0).floor() / 1000.0).collect();
    check(truncated == [30.392, 23.336, 3.050, 0.220], format!("quotas {:?}", plan.quotas))?;
    check(plan.allocations == [30, 23, 3, 1], format!("allocations {:?}", plan.allocations))?;
    within_time(start, Duration::from_secs(1))?;
    Ok(format!("allocations {:?}", plan.allocations))
}

fn pair_generation() -> Outcome {
    let start = Instant::now();
    let correlated: Vec<(String, String)> = CORRELATED.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect();
    let pairs = generate_pairs(&retained_six(), &correlated).map_err(|e| e.to_string())?;
    let set = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<BTreeSet<String>>();
    let table: BTreeSet<BTreeSet<String>> = [
        ["ROA", "EQ_RATIO", "CA_TS"],
        ["ROA", "EQ_RATIO", "CA_TA"],
        ["ROA", "TD_TA", "CA_TS"],
        ["ROA", "TD_TA", "CA_TA"],
        ["EBITDA_TA", "EQ_RATIO", "CA_TS"],
        ["EBITDA_TA", "EQ_RATIO", "CA_TA"],
        ["EBITDA_TA", "TD_TA", "CA_TS"],
        ["EBITDA_TA", "TD_TA", "CA_TA"],
    ]
    .iter()
    .map(|f| set(f))
    .collect();
    let got: BTreeSet<BTreeSet<String>> = pairs.iter().map(|p| p.f.iter().cloned().collect()).collect();
    check(pairs.len() == 8, format!("{} pairs", pairs.len()))?;
    check(got == table, format!("F sides {got:?}"))?;
    within_time(start, Duration::from_secs(1))?;
    Ok("8 pairs, F sides match".into())
}

fn metrics_oracle() -> Outcome {
    let r = metrics(&ConfusionMatrix { tp: 8, fp: 3, fn_: 4, tn: 7 }).map_err(|e| e.to_string())?;
    let oca = r.oca.ok_or("OCA undefined")?;
    check(format!("{oca:.2}") == "68.18", format!("OCA {oca}"))?;
    let auroc = 50.0 * (8.0 / 12.0 + 7.0 / 10.0);
    let hand = [
        ("SENS", 800.0 / 11.0),
        ("SPEC", 700.0 / 11.0),
        ("ACA", 1500.0 / 22.0),
        ("AUROC", auroc),
        ("GINI", 2.0 * auroc - 100.0),
    ];
    for (ind, want) in hand {
        let got = r.get(ind).ok_or(format!("{ind} undefined"))?;
        check((got - want).abs() <= REL_TOL * want.abs(), format!("{ind} {got} vs {want}"))?;
    }
    Ok(format!("OCA {oca:.2}, GINI {:.2}", r.gini.unwrap_or(f64::NAN)))
}

fn threshold_rule() -> Outcome {
    let t = Thresholds::from_range(6.0);
    check(t.q == 1.0 && t.p == 4.0 && t.s == 2.5, format!("{t:?}"))?;
    Ok("q 1, p 4, s 2.5".into())
}

fn solver_oracle() -> Outcome {
    let start = Instant::now();
    let tol = Tolerances::default();
    let mut r = rng(2024);
    let mut feasible = 0;
    for case in 0..200 {
        let p = random_lp(&mut r, 5, 5);
        let s = solve_lp(&p, &tol).map_err(|e| format!("LP {case}: {e}"))?;
        match vertex_enumeration(&p) {
            None => check(s.status == Status::Infeasible, format!("LP {case}: {:?}, oracle infeasible", s.status))?,
            Some(best) => {
                feasible += 1;
                check(s.status == Status::Optimal, format!("LP {case}: {:?}", s.status))?;
                check(
                    (s.objective - best).abs() <= LP_TOL * (1.0 + best.abs()),
                    format!("LP {case}: {} vs {best}", s.objective),
                )?;
            }
        }
    }
    for case in 0..100 {
        let p = random_binary_program(&mut r, 8, 4);
        let s = solve_mip(&p, &tol).map_err(|e| format!("MIP {case}: {e}"))?;
        match exhaustive_binary(&p) {
            None => check(s.status == Status::Infeasible, format!("MIP {case}: {:?}", s.status))?,
            Some(best) => check(
                s.status == Status::Optimal && s.objective == best,
                format!("MIP {case}: {} vs {best}", s.objective),
            )?,
        }
    }
    within_time(start, Duration::from_secs(30))?;
    Ok(format!("200 LPs ({feasible} feasible), 100 MIPs, {:.2?}", start.elapsed()))
}

fn separability() -> Outcome {
    let start = Instant::now();
    let mut g = rng(6);
    let labels: Vec<Class> = (0..114).map(|j| if j < 57 { Class::C1 } else { Class::C2 }).collect();
    let rows: Vec<Vec<f64>> = labels
        .iter()
        .map(|c| {
            let (lo, hi) = if *c == Class::C1 { (0.55, 1.0) } else { (0.0, 0.45) };
            (0..3).map(|_| g.random_range(lo..hi)).collect()
        })
        .collect();
    let m = matrix(rows, labels);
    let cfg = MhdisConfig::default();
    let model = fit(&m, &cfg).map_err(|e| e.to_string())?;
    let d = &model.stages[0].diagnostics;
    check(d.lp1_error < 1e-6, format!("LP1 error {}", d.lp1_error))?;
    check(d.mip_misclassified == 0, format!("MIP count {}", d.mip_misclassified))?;
    check(d.lp2_margin >= cfg.delta, format!("margin {}", d.lp2_margin))?;
    let predicted = predict(&model, &m).map_err(|e| e.to_string())?;
    let correct = predicted.iter().zip(&m.labels).filter(|(p, t)| p == t).count();
    check(correct == 114, format!("training OCA {:.2}", 100.0 * correct as f64 / 114.0))?;
    let monotone = model
        .stages
        .iter()
        .all(|s| [Side::K, Side::NotK].iter().all(|&side| s.side(side).iter().all(|u| u.is_monotone())));
    check(monotone, "a marginal decreases")?;
    within_time(start, Duration::from_secs(10))?;
    Ok(format!("margin {:.4}, training OCA 100", d.lp2_margin))
}

fn promethee_invariants() -> Outcome {
    let start = Instant::now();
    let mut g = rng(77);
    for case in 0..100 {
        let m_rows = g.random_range(2..=30);
        let n = g.random_range(1..=6);
        // Values, scales and shifts on a dyadic grid keep the rescaling exact.
        let rows: Vec<Vec<f64>> =
            (0..m_rows).map(|_| (0..n).map(|_| g.random_range(-320..=320) as f64 / 8.0).collect()).collect();
        let m = matrix(rows, vec![Class::C1; m_rows]);
        let names: Vec<String> = m.criteria.clone();
        let col = g.random_range(0..n);
        let scale = 2f64.powi(g.random_range(-3..=3));
        let shift = g.random_range(-100..=100) as f64 / 8.0;
        let mut moved = m.clone();
        for r in &mut moved.rows {
            r[col] = scale * r[col] + shift;
        }
        let cfg = PrometheeConfig { scenarios: 20, seed: g.random(), ..Default::default() };
        for kind in PreferenceFunctionKind::ALL {
            for w in sample_weights(n, 5, cfg.seed, WeightMethod::HitAndRun) {
                let f = flows_at_weights(&m, &names, kind, &w).map_err(|e| e.to_string())?;
                let sum: f64 = f.iter().map(|x| x.phi).sum();
                check(sum.abs() <= FLOW_TOL, format!("case {case} {kind}: sum {sum}"))?;
                check(
                    f.iter().all(|x| (-1.0..=1.0).contains(&x.phi)),
                    format!("case {case} {kind}: flow outside [-1, 1]"),
                )?;
            }
            let a = median_cut(&run_promethee(&m, &names, kind, &cfg).map_err(|e| e.to_string())?);
            let b = median_cut(&run_promethee(&moved, &names, kind, &cfg).map_err(|e| e.to_string())?);
            check(a.classes == b.classes, format!("case {case} {kind}: classes change under rescaling"))?;
        }
    }
    for kind in PreferenceFunctionKind::ALL {
        let t = Thresholds::from_range(g.random_range(0.1..10.0));
        let grid: Vec<f64> = (0..1000).map(|i| -t.r + 2.0 * t.r * i as f64 / 999.0).collect();
        let p: Vec<f64> = grid.iter().map(|&d| preference_degree(kind, d, &t)).collect();
        check(p.windows(2).all(|w| w[1] >= w[0]), format!("{kind} decreases"))?;
    }
    within_time(start, Duration::from_secs(30))?;
    Ok(format!("100 instances x 6 kinds, {:.2?}", start.elapsed()))
}

/// Mean and batch-means standard error of a correlated series.
fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let batches = 50;
    let size = xs.len() / batches;
    let means: Vec<f64> = xs.chunks(size).take(batches).map(|c| c.iter().sum::<f64>() / c.len() as f64).collect();
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (batches - 1) as f64;
    (mean, (var / batches as f64).sqrt())
}

fn weight_sampler() -> Outcome {
    let start = Instant::now();
    let hr = sample_weights(3, 10_000, 2024, WeightMethod::HitAndRun);
    let ex = sample_weights(3, 10_000, 2024, WeightMethod::ExactUniform);
    let target_var = 1.0 / 18.0;
    let mut worst = 0.0f64;
    for i in 0..3 {
        let xh: Vec<f64> = hr.iter().map(|w| w[i]).collect();
        let xe: Vec<f64> = ex.iter().map(|w| w[i]).collect();
        let (mh, seh) = mean_and_se(&xh);
        let (me, see) = mean_and_se(&xe);
        check((mh - 1.0 / 3.0).abs() <= MEAN_TOL, format!("coordinate {i}: mean {mh}"))?;
        let sq = |x: &[f64], m: f64| x.iter().map(|v| (v - m).powi(2)).collect::<Vec<f64>>();
        let (vh, sevh) = mean_and_se(&sq(&xh, mh));
        let (ve, seve) = mean_and_se(&sq(&xe, me));
        check((vh - target_var).abs() <= VAR_REL_TOL * target_var, format!("coordinate {i}: variance {vh}"))?;
        let z_mean = (mh - me).abs() / (seh * seh + see * see).sqrt();
        let z_var = (vh - ve).abs() / (sevh * sevh + seve * seve).sqrt();
        check(z_mean <= SE_FACTOR, format!("coordinate {i}: means differ by {z_mean:.2} SE"))?;
        check(z_var <= SE_FACTOR, format!("coordinate {i}: variances differ by {z_var:.2} SE"))?;
        worst = worst.max(z_mean).max(z_var);
    }
    within_time(start, Duration::from_secs(5))?;
    Ok(format!("largest gap {worst:.2} SE"))
}

fn linearity() -> Outcome {
    let start = Instant::now();
    let mut g = rng(9);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let m_rows = g.random_range(3..=25);
        let n = g.random_range(2..=5);
        let rows: Vec<Vec<f64>> = (0..m_rows).map(|_| (0..n).map(|_| g.random_range(-1.0..1.0)).collect()).collect();
        let m = matrix(rows, vec![Class::C1; m_rows]);
        let names = m.criteria.clone();
        let cfg = PrometheeConfig { scenarios: 1_000, seed: g.random(), ..Default::default() };
        let w = sample_weights(n, cfg.scenarios, cfg.seed, cfg.weights);
        let w_bar: Vec<f64> = (0..n).map(|i| w.iter().map(|v| v[i]).sum::<f64>() / w.len() as f64).collect();
        for kind in PreferenceFunctionKind::ALL {
            let avg = run_promethee(&m, &names, kind, &cfg).map_err(|e| e.to_string())?;
            let at_mean = flows_at_weights(&m, &names, kind, &w_bar).map_err(|e| e.to_string())?;
            for (a, b) in avg.flows.iter().zip(&at_mean) {
                worst = worst.max((a.phi - b.phi).abs());
            }
        }
    }
    check(worst <= FLOW_TOL, format!("largest gap {worst:e}"))?;
    within_time(start, Duration::from_secs(5))?;
    Ok(format!("largest gap {worst:.1e}"))
}

fn csv_lines(write: impl FnOnce(&mut Vec<u8>) -> mhdis_core::Result<()>) -> Result<usize, String> {
    let mut buf = Vec::new();
    write(&mut buf).map_err(|e| e.to_string())?;
    Ok(String::from_utf8(buf).map_err(|e| e.to_string())?.lines().count())
}

fn end_to_end_sweep() -> Outcome {
    let start = Instant::now();
    let one = fixture_sweep(1);
    let first = start.elapsed();
    within_time(start, Duration::from_secs(300))?;
    let two = fixture_sweep(2);
    let json = |r: &SweepResult| {
        let mut r = r.clone();
        r.config.workers = 0;
        serde_json::to_string(&r).unwrap()
    };
    check(json(&one) == json(&two), "results differ between 1 and 2 workers")?;
    check(one.pairs.len() == 8 && one.companies == 114, "fixture shape")?;
    check(one.failed_fits() == 0, format!("{} failed fits", one.failed_fits()))?;
    for year in 1..=4 {
        let n = csv_lines(|b| one.write_table4_csv(year, b))?;
        check(n > 1, format!("empty year-{year} table"))?;
    }
    check(csv_lines(|b| one.write_table12_csv(b))? > 1, "empty range table")?;
    let oca: Vec<f64> = (1..=4).map(|y| one.headline("OCA", y, Split::Test).unwrap()).collect();
    check(oca.windows(2).all(|w| w[1] <= w[0]), format!("test OCA by year {oca:?}"))?;
    let v: serde_json::Value = serde_json::from_str(include_str!("fixtures/expected.json")).unwrap();
    let recorded: Vec<f64> = v["fixture_sweep"]["headline_test_oca"]
        .as_array()
        .ok_or("no recorded values")?
        .iter()
        .filter_map(|x| x.as_f64())
        .collect();
    check(
        recorded.len() == 4 && oca.iter().zip(&recorded).all(|(a, b)| (a - b).abs() < 1e-9),
        format!("test OCA {oca:?} vs recorded {recorded:?}"),
    )?;
    let shown: Vec<String> = oca.iter().map(|x| format!("{x:.2}")).collect();
    Ok(format!("test OCA {} in {first:.1?} per run", shown.join(" > ")))
}

fn screening_oracle() -> Outcome {
    let start = Instant::now();
    let ds = screening_fixture(57, 3).map_err(|e| e.to_string())?;
    let r = run_screening(&ds, &ScreeningConfig::default()).map_err(|e| e.to_string())?;
    let counts = [r.input.len(), r.stage1_survivors.len(), r.stage2_survivors.len(), r.retained.len()];
    check(counts == [37, 34, 8, 6], format!("counts {counts:?}"))?;
    let got: BTreeSet<&str> = r.retained.iter().map(String::as_str).collect();
    check(got == RETAINED.iter().copied().collect(), format!("retained {got:?}"))?;
    within_time(start, Duration::from_secs(5))?;
    Ok("37 -> 34 -> 8 -> 6".into())
}

type Check = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Check; 11] = [
        ("stratified resampling table", stratified_table),
        ("pair generation", pair_generation),
        ("metrics oracle", metrics_oracle),
        ("threshold rule", threshold_rule),
        ("LP/MIP solver oracle", solver_oracle),
        ("M.H.DIS separability", separability),
        ("PROMETHEE invariants", promethee_invariants),
        ("weight sampler moments", weight_sampler),
        ("net flow linearity", linearity),
        ("end-to-end sweep", end_to_end_sweep),
        ("screening oracle", screening_oracle),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
