use thiserror::Error;

use crate::model::ValidationReport;

pub type Result<T> = std::result::Result<T, TuningError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TuningError {
    #[error("invalid model: {0}")]
    InvalidModel(ValidationReport),

    #[error("invalid strategy: {0}")]
    InvalidStrategy(ValidationReport),

    #[error("state label {label} is not an internal state (expected 2..={})", n_internal + 1)]
    LabelOutOfRange { label: usize, n_internal: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("I - P00 is numerically singular: {0}")]
    SingularSystem(String),

    #[error("absorption probabilities are not strictly positive: {0}")]
    BNotPositive(ValidationReport),

    #[error("embedded chain has two absorbing states (p01 + p10 = {0:e})")]
    DegenerateChain(f64),

    #[error("free-evolution segment exceeded {limit} steps")]
    CycleLimit { limit: u64 },
}

impl TuningError {
    /// Machine-readable error code.
    pub fn code(&self) -> &'static str {
        match self {
            TuningError::InvalidModel(_) => "INVALID_MODEL",
            TuningError::InvalidStrategy(_) => "INVALID_STRATEGY",
            TuningError::LabelOutOfRange { .. } => "LABEL_OUT_OF_RANGE",
            TuningError::InvalidArgument(_) => "INVALID_ARGUMENT",
            TuningError::DimensionMismatch(_) => "DIMENSION_MISMATCH",
            TuningError::SingularSystem(_) => "SINGULAR_SYSTEM",
            TuningError::BNotPositive(_) => "B_NOT_POSITIVE",
            TuningError::DegenerateChain(_) => "DEGENERATE_CHAIN",
            TuningError::CycleLimit { .. } => "CYCLE_LIMIT",
        }
    }

    /// True for failures of the numerical pipeline, as opposed to bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            TuningError::SingularSystem(_)
                | TuningError::BNotPositive(_)
                | TuningError::DegenerateChain(_)
                | TuningError::CycleLimit { .. }
        )
    }
}
