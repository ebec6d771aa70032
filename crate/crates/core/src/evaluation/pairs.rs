use serde::{Deserialize, Serialize};

use crate::dataset::CriterionSpec;
use crate::error::{Error, Result};

/// A split of six criteria into a PROMETHEE side `f` and an M.H.DIS side
/// `f_complement`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairCombination {
    /// 1-based.
    pub index: usize,
    pub f: Vec<String>,
    pub f_complement: Vec<String>,
}

/// Every 3/3 split of the six criteria in which neither side holds a
/// correlated couple or two criteria of one dimension. Splits are enumerated
/// lexicographically by criterion position in `criteria`.
pub fn generate_pairs(criteria: &[CriterionSpec], correlated: &[(String, String)]) -> Result<Vec<PairCombination>> {
    if criteria.len() != 6 {
        return Err(Error::Invalid(format!("pair generation needs six criteria, got {}", criteria.len())));
    }
    let clash = |a: &CriterionSpec, b: &CriterionSpec| {
        a.dimension == b.dimension
            || correlated.iter().any(|(x, y)| (x == &a.id && y == &b.id) || (x == &b.id && y == &a.id))
    };
    let admissible = |side: &[usize]| {
        side.iter().enumerate().all(|(n, &i)| side[n + 1..].iter().all(|&j| !clash(&criteria[i], &criteria[j])))
    };
    let mut out = Vec::new();
    for a in 0..6 {
        for b in a + 1..6 {
            for c in b + 1..6 {
                let f = [a, b, c];
                let rest: Vec<usize> = (0..6).filter(|i| !f.contains(i)).collect();
                if admissible(&f) && admissible(&rest) {
                    out.push(PairCombination {
                        index: out.len() + 1,
                        f: f.iter().map(|&i| criteria[i].id.clone()).collect(),
                        f_complement: rest.iter().map(|&i| criteria[i].id.clone()).collect(),
                    });
                }
            }
        }
    }
    Ok(out)
}
