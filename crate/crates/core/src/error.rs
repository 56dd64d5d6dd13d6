use thiserror::Error;

/// Errors from the probability model, the herding protocol and the stopping problem.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("observation {observation} has zero probability under the prior")]
    ZeroLikelihood { observation: usize },

    #[error("action {action} has zero probability under the prior")]
    ImpossibleAction { action: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("{what} index {index} out of range (len {len})")]
    IndexOutOfRange { what: &'static str, index: usize, len: usize },

    #[error("invalid belief: {0}")]
    InvalidBelief(String),

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("value iteration did not converge after {sweeps} sweeps (last change {last_change:e})")]
    NonConvergence { sweeps: usize, last_change: f64 },

    #[error("observation source failed: {0}")]
    ObservationSource(String),
}

/// Errors reading or writing the plain-text file formats.
#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: cannot parse {field:?} as a number")]
    BadNumber { line: usize, field: String },

    #[error("line {line}: {message}")]
    BadLine { line: usize, message: String },

    #[error(transparent)]
    Model(#[from] ModelError),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
