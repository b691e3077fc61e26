use thiserror::Error;

/// Errors raised by the library.
///
/// Variants are grouped by how the command-line front end maps them to exit
/// codes: precondition failures exit with 2, exhausted budgets/retries with 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("size mismatch: {what} has {got} entries, expected {expected}")]
    SizeMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("norm validation failed for {label}: {reason}")]
    InvalidNorm { label: String, reason: String },

    #[error("points {0} and {1} coincide")]
    CoincidentPoints(usize, usize),

    #[error("graph is not {0}-regular (vertex {1} has degree {2})")]
    NotRegular(usize, usize, usize),

    #[error("graph is disconnected")]
    Disconnected,

    #[error("tuple is outside the domain: {0}")]
    OutsideDomain(String),

    #[error("retries exhausted after {attempts} attempts: {what}")]
    RetriesExhausted { what: String, attempts: usize },

    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::RetriesExhausted { .. } | Error::BudgetExceeded(_) => 3,
            Error::Io(_) | Error::Json(_) => 1,
            _ => 2,
        }
    }

    /// Short machine-readable tag for structured error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::SizeMismatch { .. } => "size_mismatch",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::InvalidNorm { .. } => "invalid_norm",
            Error::CoincidentPoints(..) => "coincident_points",
            Error::NotRegular(..) => "not_regular",
            Error::Disconnected => "disconnected",
            Error::OutsideDomain(_) => "outside_domain",
            Error::RetriesExhausted { .. } => "retries_exhausted",
            Error::BudgetExceeded(_) => "budget_exceeded",
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
