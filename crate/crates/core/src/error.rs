use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// (d, α) outside 0 < α < min(2, d), d ∈ {1, 2, 3}, or a β outside (0, d − α).
    #[error("parameter out of domain: {0}")]
    ParameterDomain(String),
    /// Hardy strength outside the range where a harmonic exponent exists.
    #[error("out of range: {0}")]
    OutOfRange(String),
    /// Evaluation at the singular point x = 0.
    #[error("singular point: {0}")]
    SingularPoint(String),
    /// Invalid grid, domain or estimator configuration.
    #[error("configuration error: {0}")]
    Config(String),
    /// Caller broke a documented precondition (dimension mismatch, negative data, t ≤ 0).
    #[error("contract violation: {0}")]
    Contract(String),
    /// A structural invariant failed at run time; usually an assembly defect.
    #[error("invariant violated: {0}")]
    Invariant(String),
    /// A linear-algebra kernel failed (singular system, non-finite values).
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
