//! Panel data ingestion, direction alignment and outlier trimming.

pub mod catalog;

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{quantile_sorted, sorted};

pub const YEARS: [u8; 4] = [1, 2, 3, 4];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Dimension {
    Profitability,
    FinancialStructure,
    Liquidity,
    Turnover,
    Solvency,
    Activity,
    Size,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Increasing,
    Decreasing,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriterionSpec {
    pub id: String,
    pub name: String,
    pub dimension: Dimension,
    pub direction: Direction,
}

/// Two-class label. `C1` is the healthy (active) class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Class {
    C1,
    C2,
}

impl Class {
    pub fn index(self) -> usize {
        match self {
            Class::C1 => 0,
            Class::C2 => 1,
        }
    }

    pub fn from_index(i: usize) -> Self {
        if i == 0 {
            Class::C1
        } else {
            Class::C2
        }
    }

    fn token(self) -> &'static str {
        match self {
            Class::C1 => "active",
            Class::C2 => "inactive",
        }
    }
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Class::C1 => "C1",
            Class::C2 => "C2",
        })
    }
}

impl FromStr for Class {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "active" => Ok(Class::C1),
            "inactive" => Ok(Class::C2),
            _ => Err(Error::UnknownLabel(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SizeStratum {
    Large,
    Medium,
    Small,
    Micro,
}

impl SizeStratum {
    pub const ALL: [SizeStratum; 4] = [SizeStratum::Large, SizeStratum::Medium, SizeStratum::Small, SizeStratum::Micro];

    pub fn index(self) -> usize {
        self as usize
    }

    fn token(self) -> &'static str {
        match self {
            SizeStratum::Large => "large",
            SizeStratum::Medium => "medium",
            SizeStratum::Small => "small",
            SizeStratum::Micro => "micro",
        }
    }
}

impl FromStr for SizeStratum {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "large" => Ok(SizeStratum::Large),
            "medium" => Ok(SizeStratum::Medium),
            "small" => Ok(SizeStratum::Small),
            "micro" => Ok(SizeStratum::Micro),
            _ => Err(format!("unknown size stratum {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompanyRecord {
    pub company_id: String,
    pub label: Class,
    pub size_stratum: SizeStratum,
    /// `values[c][y - 1]` is criterion `c` (dataset order) at year offset `y`.
    pub values: Vec<[Option<f64>; 4]>,
}

impl CompanyRecord {
    pub fn value(&self, criterion: usize, year: u8) -> Option<f64> {
        self.values[criterion][usize::from(year) - 1]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PanelDataset {
    pub criteria: Vec<CriterionSpec>,
    pub companies: Vec<CompanyRecord>,
}

impl PanelDataset {
    pub fn criterion_index(&self, id: &str) -> Result<usize> {
        self.criteria.iter().position(|c| c.id == id).ok_or_else(|| Error::UnknownCriterion(id.to_string()))
    }

    pub fn spec(&self, id: &str) -> Result<&CriterionSpec> {
        Ok(&self.criteria[self.criterion_index(id)?])
    }

    pub fn criterion_ids(&self) -> Vec<String> {
        self.criteria.iter().map(|c| c.id.clone()).collect()
    }

    /// Values of one criterion in one year, split by class, skipping missing.
    pub fn class_values(&self, criterion: usize, year: u8) -> (Vec<f64>, Vec<f64>) {
        let mut active = Vec::new();
        let mut inactive = Vec::new();
        for c in &self.companies {
            if let Some(v) = c.value(criterion, year) {
                match c.label {
                    Class::C1 => active.push(v),
                    Class::C2 => inactive.push(v),
                }
            }
        }
        (active, inactive)
    }

    /// Keeps the listed companies, in the given order.
    pub fn subset(&self, indices: &[usize]) -> PanelDataset {
        PanelDataset {
            criteria: self.criteria.clone(),
            companies: indices.iter().map(|&i| self.companies[i].clone()).collect(),
        }
    }
}

const FIXED_COLUMNS: [&str; 4] = ["company_id", "label", "size_stratum", "year_offset"];

/// Parses the panel CSV. Criterion columns must be declared in `catalog`.
pub fn load_dataset<R: Read>(source: R, catalog: &[CriterionSpec]) -> Result<PanelDataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
    let header = rdr.headers().map_err(|e| Error::Header(e.to_string()))?.clone();
    let cols: Vec<&str> = header.iter().collect();
    let mut fixed = [usize::MAX; 4];
    for (k, name) in FIXED_COLUMNS.iter().enumerate() {
        let hits: Vec<usize> =
            cols.iter().enumerate().filter(|(_, c)| c.eq_ignore_ascii_case(name)).map(|(i, _)| i).collect();
        match hits.as_slice() {
            [i] => fixed[k] = *i,
            [] => return Err(Error::Header(format!("missing required column {name:?}"))),
            _ => return Err(Error::Header(format!("column {name:?} repeated"))),
        }
    }
    let mut criteria = Vec::new();
    let mut crit_cols = Vec::new();
    for (i, name) in cols.iter().enumerate() {
        if fixed.contains(&i) {
            continue;
        }
        if name.is_empty() {
            return Err(Error::Header(format!("empty column name at position {}", i + 1)));
        }
        if criteria.iter().any(|c: &CriterionSpec| c.id == *name) {
            return Err(Error::Header(format!("column {name:?} repeated")));
        }
        let spec = catalog.iter().find(|c| c.id == *name).ok_or_else(|| Error::UnknownCriterion(name.to_string()))?;
        criteria.push(spec.clone());
        crit_cols.push(i);
    }

    let mut companies: Vec<CompanyRecord> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut seen: HashSet<(String, u8)> = HashSet::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let bad = |message: String| Error::Record { line, message };
        let id = rec[fixed[0]].to_string();
        if id.is_empty() {
            return Err(bad("empty company_id".into()));
        }
        let label: Class = rec[fixed[1]].parse()?;
        let stratum: SizeStratum = rec[fixed[2]].parse().map_err(bad)?;
        let year: u8 = rec[fixed[3]]
            .parse()
            .ok()
            .filter(|y| YEARS.contains(y))
            .ok_or_else(|| bad(format!("year_offset {:?} not in 1..=4", &rec[fixed[3]])))?;
        if !seen.insert((id.clone(), year)) {
            return Err(Error::DuplicateCompany { company_id: id, year });
        }
        let ci = match index.get(&id) {
            Some(&ci) => {
                let c = &companies[ci];
                if c.label != label || c.size_stratum != stratum {
                    return Err(bad(format!("company {id} changes label or stratum between rows")));
                }
                ci
            }
            None => {
                index.insert(id.clone(), companies.len());
                companies.push(CompanyRecord {
                    company_id: id,
                    label,
                    size_stratum: stratum,
                    values: vec![[None; 4]; criteria.len()],
                });
                companies.len() - 1
            }
        };
        let y = usize::from(year) - 1;
        for (k, &col) in crit_cols.iter().enumerate() {
            // Unparseable or non-finite numerics are recorded as missing.
            companies[ci].values[k][y] = rec[col].parse::<f64>().ok().filter(|v| v.is_finite());
        }
    }
    Ok(PanelDataset { criteria, companies })
}

/// Writes the dataset in the same CSV schema, one row per company and year
/// in which the company has at least one value.
pub fn write_dataset<W: Write>(ds: &PanelDataset, sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    let mut header: Vec<String> = FIXED_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.extend(ds.criteria.iter().map(|c| c.id.clone()));
    w.write_record(&header)?;
    for c in &ds.companies {
        for year in YEARS {
            let y = usize::from(year) - 1;
            if c.values.iter().all(|v| v[y].is_none()) {
                continue;
            }
            let mut row = vec![
                c.company_id.clone(),
                c.label.token().to_string(),
                c.size_stratum.token().to_string(),
                year.to_string(),
            ];
            row.extend(c.values.iter().map(|v| v[y].map_or(String::new(), |x| format!("{x}"))));
            w.write_record(&row)?;
        }
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerformanceMatrix {
    pub year: u8,
    pub criteria: Vec<String>,
    pub directions: Vec<Direction>,
    pub company_ids: Vec<String>,
    pub labels: Vec<Class>,
    pub strata: Vec<SizeStratum>,
    /// One row per company, one value per criterion.
    pub rows: Vec<Vec<f64>>,
}

impl PerformanceMatrix {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_criteria(&self) -> usize {
        self.criteria.len()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    pub fn select_rows(&self, idx: &[usize]) -> PerformanceMatrix {
        PerformanceMatrix {
            year: self.year,
            criteria: self.criteria.clone(),
            directions: self.directions.clone(),
            company_ids: idx.iter().map(|&i| self.company_ids[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            strata: idx.iter().map(|&i| self.strata[i]).collect(),
            rows: idx.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    /// Keeps the listed criteria, in the given order.
    pub fn select_criteria<S: AsRef<str>>(&self, ids: &[S]) -> Result<PerformanceMatrix> {
        let cols: Vec<usize> = ids
            .iter()
            .map(|id| {
                self.criteria
                    .iter()
                    .position(|c| c == id.as_ref())
                    .ok_or_else(|| Error::UnknownCriterion(id.as_ref().to_string()))
            })
            .collect::<Result<_>>()?;
        Ok(PerformanceMatrix {
            year: self.year,
            criteria: cols.iter().map(|&j| self.criteria[j].clone()).collect(),
            directions: cols.iter().map(|&j| self.directions[j]).collect(),
            company_ids: self.company_ids.clone(),
            labels: self.labels.clone(),
            strata: self.strata.clone(),
            rows: self.rows.iter().map(|r| cols.iter().map(|&j| r[j]).collect()).collect(),
        })
    }

    pub fn with_labels(mut self, labels: Vec<Class>) -> Result<PerformanceMatrix> {
        if labels.len() != self.rows.len() {
            return Err(Error::LengthMismatch(labels.len(), self.rows.len()));
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn row_of(&self, company_id: &str) -> Option<usize> {
        self.company_ids.iter().position(|c| c == company_id)
    }
}

/// Assembles the rectangular matrix of `criteria` at `year`, in company input
/// order. With `drop_missing`, incomplete companies are excluded; without it
/// a missing cell is an error.
pub fn build_matrix<S: AsRef<str>>(
    ds: &PanelDataset,
    year: u8,
    criteria: &[S],
    drop_missing: bool,
) -> Result<PerformanceMatrix> {
    if !YEARS.contains(&year) {
        return Err(Error::Invalid(format!("year offset {year} not in 1..=4")));
    }
    let cols: Vec<usize> = criteria.iter().map(|id| ds.criterion_index(id.as_ref())).collect::<Result<_>>()?;
    let mut m = PerformanceMatrix {
        year,
        criteria: cols.iter().map(|&j| ds.criteria[j].id.clone()).collect(),
        directions: cols.iter().map(|&j| ds.criteria[j].direction).collect(),
        company_ids: Vec::new(),
        labels: Vec::new(),
        strata: Vec::new(),
        rows: Vec::new(),
    };
    'companies: for c in &ds.companies {
        let mut row = Vec::with_capacity(cols.len());
        for &j in &cols {
            match c.value(j, year) {
                Some(v) => row.push(v),
                None if drop_missing => continue 'companies,
                None => {
                    return Err(Error::MissingValue {
                        company_id: c.company_id.clone(),
                        criterion: ds.criteria[j].id.clone(),
                        year,
                    })
                }
            }
        }
        m.company_ids.push(c.company_id.clone());
        m.labels.push(c.label);
        m.strata.push(c.size_stratum);
        m.rows.push(row);
    }
    if m.rows.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    Ok(m)
}

/// Negates decreasing-direction columns per `specs` and marks every column
/// increasing.
pub fn align_directions(m: &PerformanceMatrix, specs: &[CriterionSpec]) -> Result<PerformanceMatrix> {
    let flip: Vec<bool> = m
        .criteria
        .iter()
        .map(|id| {
            specs
                .iter()
                .find(|s| &s.id == id)
                .map(|s| s.direction == Direction::Decreasing)
                .ok_or_else(|| Error::UnknownCriterion(id.clone()))
        })
        .collect::<Result<_>>()?;
    let mut out = m.clone();
    for row in &mut out.rows {
        for (v, &f) in row.iter_mut().zip(&flip) {
            if f {
                *v = -*v;
            }
        }
    }
    out.directions = vec![Direction::Increasing; m.criteria.len()];
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrimMode {
    /// Fences at `Q1 - 1.5 IQR` and `Q3 + 1.5 IQR`.
    #[default]
    StandardTukey,
    /// Upper fence at `Q1 + 1.5 IQR`, as the source formula is written.
    PaperLiteral,
}

impl FromStr for TrimMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "standard_tukey" => Ok(TrimMode::StandardTukey),
            "paper_literal" => Ok(TrimMode::PaperLiteral),
            _ => Err(format!("unknown trim mode {s:?} (standard_tukey | paper_literal)")),
        }
    }
}

/// Outlier fences of one column, `None` when the IQR is zero.
pub fn iqr_fences(values: &[f64], mode: TrimMode) -> Option<(f64, f64)> {
    let s = sorted(values);
    let q1 = quantile_sorted(&s, 0.25);
    let q3 = quantile_sorted(&s, 0.75);
    let iqr = q3 - q1;
    if iqr <= 0.0 {
        return None;
    }
    let upper_base = match mode {
        TrimMode::StandardTukey => q3,
        TrimMode::PaperLiteral => q1,
    };
    Some((q1 - 1.5 * iqr, upper_base + 1.5 * iqr))
}

/// Clamps every column to its outlier fences.
pub fn iqr_trim(m: &PerformanceMatrix, mode: TrimMode) -> Result<PerformanceMatrix> {
    if m.n_rows() < 4 {
        return Err(Error::Invalid(format!("trimming needs at least 4 rows, got {}", m.n_rows())));
    }
    let mut out = m.clone();
    for j in 0..m.n_criteria() {
        let Some((lo, hi)) = iqr_fences(&m.column(j), mode) else {
            continue;
        };
        for row in &mut out.rows {
            row[j] = row[j].clamp(lo, hi);
        }
    }
    Ok(out)
}

/// Year matrix of complete companies on `criteria`, aligned to increasing
/// preference and trimmed.
pub fn prepared_matrix<S: AsRef<str>>(
    ds: &PanelDataset,
    year: u8,
    criteria: &[S],
    mode: TrimMode,
) -> Result<PerformanceMatrix> {
    let specs: Vec<CriterionSpec> = criteria.iter().map(|id| ds.spec(id.as_ref()).cloned()).collect::<Result<_>>()?;
    let m = build_matrix(ds, year, criteria, true)?;
    iqr_trim(&align_directions(&m, &specs)?, mode)
}
