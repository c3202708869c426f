use thiserror::Error;

/// Failures of the command-line front end, each mapped to an exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed scenario: bad JSON, unknown fields, undeclared names or
    /// knobs out of range.
    #[error("{path}:{line}: {message}")]
    Schema { path: String, line: usize, message: String },

    #[error("unknown column {column:?}; available: {available}")]
    UnknownColumn { column: String, available: String },

    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Numerical(#[from] calabi_core::Error),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// 2 for input problems, 1 for failures while computing or writing.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema { .. } | CliError::UnknownColumn { .. } | CliError::Usage(_) => 2,
            _ => 1,
        }
    }

    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }
}

/// A malformed expression is an input problem.
impl From<calabi_core::exprlang::ExprError> for CliError {
    fn from(e: calabi_core::exprlang::ExprError) -> Self {
        CliError::Usage(format!("expression: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;
