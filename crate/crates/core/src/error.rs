use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("entry ({row}, {col}) has value {value}, expected 0 or 1")]
    NonBinaryEntry { row: usize, col: usize, value: i64 },
    #[error("duplicate identifier `{0}`")]
    DuplicateIdentifier(String),
    #[error("dataset has no units")]
    EmptyDataset,
    #[error("row {row} has {found} entries, expected {expected}")]
    RaggedRow {
        row: usize,
        found: usize,
        expected: usize,
    },
    #[error("entry ({row}, {col}) is outside [0, {max}]")]
    OutOfRange { row: usize, col: usize, max: i64 },
    #[error("factor `{0}` has a single level")]
    SingleLevelFactor(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("concentration parameters must be strictly positive")]
    NonPositiveConcentration,
    #[error("alpha1 = {value} is outside the support (0, {upper}]")]
    OutOfSupport { value: f64, upper: f64 },
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error(
        "no sign change of P(K+ < U) - tp over the lambda bracket: \
         P = {low_tail} at lambda = {low_lambda}, P = {high_tail} at lambda = {high_lambda}"
    )]
    BracketingFailure {
        low_lambda: f64,
        low_tail: f64,
        high_lambda: f64,
        high_tail: f64,
    },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("need at least {needed} units, got {found}")]
    DimensionTooSmall { needed: usize, found: usize },
    #[error("partitions have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("no posterior sample satisfies the subpartition")]
    NoSatisfyingSamples,
    #[error("unit {0} already belongs to the subpartition")]
    UnitInSubpartition(usize),
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by malformed input data rather than by the
    /// numerical routines or the configuration.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::NonBinaryEntry { .. }
                | Error::DuplicateIdentifier(_)
                | Error::EmptyDataset
                | Error::RaggedRow { .. }
                | Error::OutOfRange { .. }
                | Error::SingleLevelFactor(_)
                | Error::DimensionMismatch(_)
                | Error::LengthMismatch(..)
                | Error::Parse { .. }
                | Error::Io(_)
                | Error::Json(_)
        )
    }

    pub fn is_numerical_error(&self) -> bool {
        matches!(
            self,
            Error::NumericalFailure(_) | Error::BracketingFailure { .. }
        )
    }
}
