use thiserror::Error;

use crate::optimizer::SolverError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("malformed header: {0}")]
    Header(String),
    #[error("line {line}: {message}")]
    Record { line: u64, message: String },
    #[error("duplicate record for company {company_id} year {year}")]
    DuplicateCompany { company_id: String, year: u8 },
    #[error("unknown label token {0:?}")]
    UnknownLabel(String),
    #[error("unknown criterion {0:?}")]
    UnknownCriterion(String),
    #[error("missing value for company {company_id} on {criterion} year {year}")]
    MissingValue { company_id: String, criterion: String, year: u8 },
    #[error("matrix is empty after dropping incomplete rows")]
    EmptyMatrix,
    #[error("weight of evidence undefined: both proportions are zero")]
    UndefinedWoe,
    #[error("input contains a single class")]
    SingleClass,
    #[error("degenerate groups: {0}")]
    DegenerateGroups(String),
    #[error("zero variance")]
    ZeroVariance,
    #[error("stratum {stratum} allocation {allocation} exceeds population {population}")]
    AllocationExceedsPopulation { stratum: usize, allocation: usize, population: usize },
    #[error("class {class} has {size} members, fewer than k = {k}")]
    ClassTooSmall { class: String, size: usize, k: usize },
    #[error("confusion matrix is all zero")]
    EmptyConfusion,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("solver: {0}")]
    Solver(#[from] SolverError),
    #[error("io: {0}")]
    Io(String),
}

impl Error {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Header(_) => "malformed_header",
            Error::Record { .. } => "malformed_record",
            Error::DuplicateCompany { .. } => "duplicate_company",
            Error::UnknownLabel(_) => "unknown_label",
            Error::UnknownCriterion(_) => "unknown_criterion",
            Error::MissingValue { .. } => "missing_value",
            Error::EmptyMatrix => "empty_matrix",
            Error::UndefinedWoe => "undefined_woe",
            Error::SingleClass => "single_class",
            Error::DegenerateGroups(_) => "degenerate_groups",
            Error::ZeroVariance => "zero_variance",
            Error::AllocationExceedsPopulation { .. } => "allocation_exceeds_population",
            Error::ClassTooSmall { .. } => "class_too_small",
            Error::EmptyConfusion => "empty_confusion",
            Error::LengthMismatch(..) => "length_mismatch",
            Error::Invalid(_) => "invalid_input",
            Error::Solver(SolverError::NodeLimit(_)) => "node_limit",
            Error::Solver(SolverError::PivotLimit(_)) => "pivot_limit",
            Error::Solver(_) => "solver_failure",
            Error::Io(_) => "io",
        }
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        match e.position() {
            Some(p) => Error::Record { line: p.line(), message: e.to_string() },
            None => Error::Io(e.to_string()),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
