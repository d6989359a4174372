use std::path::PathBuf;

/// Errors produced by the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("reactance block {block} is not symmetric")]
    NonSymmetric { block: usize },

    #[error("unreachable reflection: phase {0} rad needs an infinite reactance")]
    UnreachableReflection(f64),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("empty training set")]
    EmptyTraining,

    #[error("unknown suite `{name}`; valid suites: {}", valid.join(", "))]
    UnknownSuite { name: String, valid: Vec<String> },

    #[error("missing codebook file {}", .0.display())]
    MissingCodebook(PathBuf),

    #[error("invariant violation: {0}")]
    InvariantViolation(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
