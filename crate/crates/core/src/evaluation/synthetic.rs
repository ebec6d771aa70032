//! Seeded synthetic panels standing in for proprietary company data.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::catalog::{ratio_catalog, retained_six};
use crate::dataset::{Class, CompanyRecord, Direction, PanelDataset, SizeStratum};
use crate::error::{Error, Result};
use crate::rng::task_rng;

/// Population shares of the size strata used to tag synthetic companies.
const STRATUM_WEIGHTS: [f64; 4] = [827.0, 635.0, 83.0, 6.0];

/// Location and scale of each retained criterion, in catalog order
/// (ROA, EBITDA_TA, EQ_RATIO, TD_TA, CA_TS, CA_TA).
const PROFILE: [(f64, f64); 6] = [(0.03, 0.08), (0.08, 0.09), (0.35, 0.20), (0.60, 0.20), (0.50, 0.30), (0.55, 0.20)];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub n_per_class: usize,
    /// Year-1 gap between class means in within-class standard deviations.
    pub separation: f64,
    pub seed: u64,
    /// Correlation inside ROA/EBITDA_TA and inside EQ_RATIO/TD_TA.
    pub correlation: f64,
    /// Correlation between CA_TS and CA_TA (in the preference direction).
    pub asset_correlation: f64,
    /// Extra noise (in standard deviations) added at each year offset.
    pub year_noise: [f64; 4],
    /// Share of the class gap still present at each year offset.
    pub year_signal: [f64; 4],
}

impl SyntheticConfig {
    pub fn new(n_per_class: usize, separation: f64, seed: u64) -> Self {
        Self {
            n_per_class,
            separation,
            seed,
            correlation: 0.9,
            asset_correlation: 0.8,
            year_noise: [0.0, 0.4, 0.7, 1.0],
            year_signal: [1.0, 0.85, 0.7, 0.55],
        }
    }

    /// The pinned 57+57 panel used by the end-to-end sweep checks.
    pub fn fixture() -> Self {
        Self::new(57, FIXTURE_SEPARATION, FIXTURE_SEED)
    }
}

pub const FIXTURE_SEED: u64 = 2024;
pub const FIXTURE_SEPARATION: f64 = 1.0;

fn draw_stratum<R: Rng>(rng: &mut R) -> SizeStratum {
    let total: f64 = STRATUM_WEIGHTS.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (s, w) in SizeStratum::ALL.into_iter().zip(STRATUM_WEIGHTS) {
        if u < w {
            return s;
        }
        u -= w;
    }
    SizeStratum::Micro
}

fn normal<R: Rng>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Six-criterion panel with Gaussian class clusters; see [`SyntheticConfig`].
pub fn gen_synthetic(cfg: &SyntheticConfig) -> Result<PanelDataset> {
    if cfg.n_per_class < 10 {
        return Err(Error::Invalid(format!("at least 10 companies per class are required, got {}", cfg.n_per_class)));
    }
    if !(cfg.correlation.abs() < 1.0 && cfg.asset_correlation.abs() < 1.0) || !cfg.separation.is_finite() {
        return Err(Error::Invalid("correlation must lie in (-1, 1) and separation be finite".into()));
    }
    let criteria = retained_six();
    let mut rng = task_rng(cfg.seed, "synthetic");
    let rho = cfg.correlation;
    let rest = (1.0 - rho * rho).sqrt();
    let rho_a = cfg.asset_correlation;
    let rest_a = (1.0 - rho_a * rho_a).sqrt();
    let mut companies = Vec::with_capacity(2 * cfg.n_per_class);
    for (n, class) in (0..2 * cfg.n_per_class).map(|n| {
        let class = if n < cfg.n_per_class { Class::C1 } else { Class::C2 };
        (n, class)
    }) {
        let half_gap = match class {
            Class::C1 => cfg.separation / 2.0,
            Class::C2 => -cfg.separation / 2.0,
        };
        let z: Vec<f64> = (0..6).map(|_| normal(&mut rng)).collect();
        let latent =
            [z[0], rho * z[0] + rest * z[1], z[2], rho * z[2] + rest * z[3], z[4], rho_a * z[4] + rest_a * z[5]];
        let mut values = vec![[None; 4]; 6];
        for y in 0..4 {
            for (i, spec) in criteria.iter().enumerate() {
                let x = cfg.year_signal[y] * half_gap + latent[i] + cfg.year_noise[y] * normal(&mut rng);
                let sign = match spec.direction {
                    Direction::Increasing => 1.0,
                    Direction::Decreasing => -1.0,
                };
                let (center, scale) = PROFILE[i];
                values[i][y] = Some(center + scale * sign * x);
            }
        }
        companies.push(CompanyRecord {
            company_id: format!("S{:04}", n + 1),
            label: class,
            size_stratum: draw_stratum(&mut rng),
            values,
        });
    }
    Ok(PanelDataset { criteria, companies })
}

#[derive(Clone, Copy, PartialEq)]
enum Mode {
    /// Inactive values repeat the active ones.
    Null,
    /// Same mean, three times the spread.
    Spread,
    /// Means one standard deviation apart.
    Shift,
}

/// Balanced 37-ratio panel whose screening outcome is known by construction:
/// three ratios carry no information in three years, twenty-six differ only
/// in spread, and eight differ in mean, two of which are linear blends of
/// two others.
pub fn screening_fixture(n_per_class: usize, seed: u64) -> Result<PanelDataset> {
    use Mode::*;
    if n_per_class < 10 {
        return Err(Error::Invalid(format!("at least 10 companies per class are required, got {}", n_per_class)));
    }
    let criteria = ratio_catalog();
    let n = n_per_class;
    let mut rng = task_rng(seed, "screening-fixture");
    let weak = ["TD_EQ", "CL_TA", "FE_TA"];
    let base = ["ROA", "EBITDA_TA", "EQ_RATIO", "TD_TA", "CA_TA", "CA_TS"];
    let blended = ["CF_TA", "DR"];
    let index = |id: &str| criteria.iter().position(|c| c.id == id).expect("catalog id");
    let mode = |c: usize, y: usize| -> Mode {
        let id = criteria[c].id.as_str();
        if weak.contains(&id) {
            if y < 3 {
                Null
            } else {
                Shift
            }
        } else if base.contains(&id) || blended.contains(&id) {
            Shift
        } else if c.is_multiple_of(2) || y < 3 {
            Spread
        } else {
            Shift
        }
    };
    // cols[c][y] holds 2n values: actives then inactives.
    let mut cols = vec![vec![Vec::new(); 4]; criteria.len()];
    for (c, spec) in criteria.iter().enumerate() {
        if blended.contains(&spec.id.as_str()) {
            continue;
        }
        let toward_inactive = match spec.direction {
            Direction::Increasing => -1.0,
            Direction::Decreasing => 1.0,
        };
        for y in 0..4 {
            let active: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
            let inactive: Vec<f64> = match mode(c, y) {
                Null => active.clone(),
                Spread => {
                    let m = active.iter().sum::<f64>() / n as f64;
                    active.iter().map(|v| m + 3.0 * (v - m)).collect()
                }
                Shift => (0..n).map(|_| toward_inactive + normal(&mut rng)).collect(),
            };
            cols[c][y] = active.into_iter().chain(inactive).collect();
        }
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let (roa, ebitda, eq, td) = (index("ROA"), index("EBITDA_TA"), index("EQ_RATIO"), index("TD_TA"));
    for y in 0..4 {
        cols[index("CF_TA")][y] = (0..2 * n).map(|r| s * (cols[roa][y][r] + cols[ebitda][y][r])).collect();
        cols[index("DR")][y] = (0..2 * n).map(|r| s * (cols[td][y][r] - cols[eq][y][r])).collect();
    }
    let companies = (0..2 * n)
        .map(|r| CompanyRecord {
            company_id: format!("F{:04}", r + 1),
            label: if r < n { Class::C1 } else { Class::C2 },
            size_stratum: draw_stratum(&mut rng),
            values: (0..criteria.len()).map(|c| [0, 1, 2, 3].map(|y| Some(cols[c][y][r]))).collect(),
        })
        .collect();
    Ok(PanelDataset { criteria, companies })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::catalog::RETAINED;
    use crate::screening::{run_screening, ScreeningConfig};

    #[test]
    fn deterministic_and_shaped() {
        let cfg = SyntheticConfig::new(57, 1.0, 7);
        let a = gen_synthetic(&cfg).unwrap();
        assert_eq!(a, gen_synthetic(&cfg).unwrap());
        assert_eq!(a.companies.len(), 114);
        assert_eq!(a.criterion_ids(), RETAINED);
        assert!(gen_synthetic(&SyntheticConfig::new(9, 1.0, 7)).is_err());
    }

    #[test]
    fn class_gap_follows_direction() {
        let ds = gen_synthetic(&SyntheticConfig::new(400, 2.0, 1)).unwrap();
        for (c, spec) in ds.criteria.iter().enumerate() {
            let (act, inact) = ds.class_values(c, 1);
            let gap = act.iter().sum::<f64>() / act.len() as f64 - inact.iter().sum::<f64>() / inact.len() as f64;
            let scale = PROFILE[c].1;
            let expected = match spec.direction {
                Direction::Increasing => 2.0 * scale,
                Direction::Decreasing => -2.0 * scale,
            };
            assert!((gap - expected).abs() < 0.25 * scale, "{} gap {gap}", spec.id);
        }
    }

    #[test]
    fn screening_fixture_counts() {
        let ds = screening_fixture(57, 3).unwrap();
        let r = run_screening(&ds, &ScreeningConfig::default()).unwrap();
        assert_eq!(r.stage1_survivors.len(), 34);
        assert_eq!(r.stage2_survivors.len(), 8);
        let mut got = r.retained.clone();
        got.sort();
        let mut want: Vec<String> = RETAINED.iter().map(|s| s.to_string()).collect();
        want.sort();
        assert_eq!(got, want);
    }
}
