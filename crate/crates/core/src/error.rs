use thiserror::Error;

use crate::corpus::LoadError;

/// Errors raised by indicator, percentile, and comparison computations.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Load(#[from] LoadError),

    #[error("empty subset")]
    EmptySubset,

    #[error("k must lie in (0, 100): {0}")]
    InvalidK(String),

    #[error("no records for year {0}")]
    EmptyYear(i32),

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("need at least {min} points, got {got}")]
    TooFewPoints { min: usize, got: usize },

    #[error("zero variance")]
    ZeroVariance,

    #[error("degenerate pooled proportion")]
    DegeneratePooledProportion,

    #[error("zero margin in contingency table")]
    ZeroMargin,

    #[error("count exceeds sample size: {x} > {n}")]
    CountExceedsSample { x: f64, n: f64 },

    #[error("sample size must be positive")]
    EmptySample,

    #[error("null proportion must lie in (0, 1): {0}")]
    InvalidProportion(f64),

    #[error("expected count must be positive")]
    NonPositiveExpected,

    #[error("stratum {0} has zero mean citations")]
    ZeroMeanStratum(String),

    #[error("record {0:?} is not mapped to exactly one broad category")]
    BroadCategoryUnmapped(String),

    #[error("broad category {0} has zero mean rank")]
    ZeroMeanRank(String),

    #[error("empty category: {0}")]
    EmptyCategory(String),

    #[error("overlapping bloc definitions: {0} and {1}")]
    OverlappingBlocs(String, String),

    #[error("reference I3 is zero")]
    ZeroReferenceI3,

    #[error("invalid synthesis spec: {0}")]
    InvalidSynthSpec(String),
}

pub type Result<T> = std::result::Result<T, Error>;
