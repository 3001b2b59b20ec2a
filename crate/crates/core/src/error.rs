use thiserror::Error;

/// Errors raised by the special functions, densities and estimators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SblError {
    /// An argument lies outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    /// Inconsistent or unsupported configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// Evaluating a proper density with parameters that make it improper.
    #[error("improper density: {0}")]
    ImproperDensity(String),

    /// A zero weight hit the pole of a sparsity-inducing prior.
    #[error("pole at the origin: {0}")]
    Pole(String),

    /// Shape parameter outside the supported stationary-point analysis.
    #[error("unsupported regime: epsilon = {epsilon} exceeds 1 + rho = {limit}")]
    UnsupportedRegime { epsilon: f64, limit: f64 },

    /// A Hermitian matrix expected to be positive definite was not.
    #[error("matrix not positive definite at pivot {pivot} ({context})")]
    NotPositiveDefinite { pivot: usize, context: String },

    /// Rank-deficient least-squares system.
    #[error("singular system: {0}")]
    Singular(String),

    /// Numerical breakdown (non-finite intermediate, failed root certificate, ...).
    #[error("numerical error: {0}")]
    Numerical(String),

    /// Argument shapes do not agree.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Malformed problem file.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T, E = SblError> = std::result::Result<T, E>;

pub(crate) fn domain(msg: impl Into<String>) -> SblError {
    SblError::Domain(msg.into())
}

pub(crate) fn config(msg: impl Into<String>) -> SblError {
    SblError::Config(msg.into())
}
