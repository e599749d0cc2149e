use thiserror::Error;

/// Errors raised by the evaluators and estimators in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    /// The denominator `1 - beta^2 sigma^2(Q) int_q^Q x` reached zero or below.
    #[error("singular order parameter: denominator {denominator:.3e} at q = {q:.6}")]
    SingularFunctional { q: f64, denominator: f64 },

    /// A correlation function blew up before the requested end time.
    #[error("divergence at t = {t:.6}: {reason}")]
    Divergence { t: f64, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
