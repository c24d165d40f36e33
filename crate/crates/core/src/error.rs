//! Error types shared across the crate.

use crate::model::ModelIndex;
use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A hyperparameter violates its range constraint.
    #[error("hyperparameter `{field}` out of range: {message}")]
    OutOfRange {
        field: &'static str,
        message: String,
    },

    /// The Gram matrix of a candidate support failed to factorize at the
    /// relative pivot tolerance. Singular supports are rejected, never
    /// regularized.
    #[error("gram matrix for support {support} is numerically singular")]
    SingularGram { support: ModelIndex },

    /// Vector/matrix shapes do not line up.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Exhaustive model enumeration would exceed the guard limit.
    #[error("enumeration would visit {count} models; guard limit is {limit}")]
    TooManyModels { count: u128, limit: u128 },

    /// Exhaustive support enumeration (restricted eigenvalue search) would
    /// exceed the guard limit.
    #[error("support search would visit {count} subsets; guard limit is {limit}")]
    TooManySupports { count: u128, limit: u128 },

    /// A posterior source (sample set or model table) contains no draws.
    #[error("empty posterior source")]
    EmptySource,

    /// The chain's initial model has a singular Gram matrix.
    #[error("initial model has singular gram matrix")]
    InitSingular,

    /// A synthetic design request cannot be satisfied.
    #[error("infeasible design: {0}")]
    InfeasibleDesign(String),

    /// Invalid input data (non-finite entries, ragged rows, bad header...).
    #[error("invalid data: {0}")]
    InvalidData(String),

    /// Invalid configuration value outside hyperparameter ranges.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
