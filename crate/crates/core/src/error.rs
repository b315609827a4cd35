//! Crate-wide error type.

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by model validation, analytic evaluation, and experiment plumbing.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A process/grid/experiment description failed validation.
    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    /// A quenched origin does not match the process family it is used with.
    #[error("origin mismatch: {0}")]
    OriginMismatch(String),

    /// A series or transfer sum has no certified convergent evaluation.
    #[error("non-summable: {0}")]
    NonSummable(String),

    /// The resolvent system (I - e^{it} Q) g = h is singular or too ill-conditioned.
    #[error("resolvent solve failed: {0}")]
    ResolventSingular(String),

    /// An iterated random map is not contractive on average.
    #[error("non-contractive map: {0}")]
    NonContractive(String),

    /// The requested operation is not defined for this model family.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// Reading or writing an artifact failed.
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// A structured text document failed to parse.
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Shorthand for an [`Error::InvalidSpec`] with a formatted message.
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidSpec(msg.into())
    }
}
