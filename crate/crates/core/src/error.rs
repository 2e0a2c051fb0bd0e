use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Crate-wide error type. Variants map onto the CLI exit-code classes:
/// usage problems are caught by the argument parser, data problems map to
/// exit code 2, and budget or degenerate-input problems map to exit code 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Structured parse failure for tabular inputs. `row` is 1-based and
    /// counts the header line, so the first data row is row 2.
    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("model format: {0}")]
    ModelFormat(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn invalid_argument(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn degenerate(msg: impl Into<String>) -> Self {
        Error::DegenerateInput(msg.into())
    }
}
