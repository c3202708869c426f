use thiserror::Error;

use crate::exprlang::ExprError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error(transparent)]
    Expr(#[from] ExprError),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("support violation: {0}")]
    Support(String),

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("solver did not converge: {0}")]
    NonConvergence(String),

    #[error("admissibility violation: {0}")]
    Admissibility(String),

    /// The flow of a constructed generator does not reproduce its target map.
    #[error("flow-match residual {residual:.3e} exceeds {tolerance:.3e} ({context})")]
    FlowMismatch { residual: f64, tolerance: f64, context: String },

    #[error("closedness residual {residual:.3e} exceeds {tolerance:.3e}")]
    Closedness { residual: f64, tolerance: f64 },

    #[error("iterate budget exceeded: {requested} iterates requested, budget {budget}")]
    IterateBudget { requested: u64, budget: u64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
