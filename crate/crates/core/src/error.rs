use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LabError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("fixed-point iteration did not converge after {iterations} iterations (last residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("instance too large: {0}")]
    TooLarge(String),

    #[error("base policy has zero mass on action {action} at state {state} where the evaluated policy has support")]
    SupportViolation { state: usize, action: usize },
}

pub type Result<T> = std::result::Result<T, LabError>;
