use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A parameter violates its domain (wrong range, wrong shape, ...).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Adaptive quadrature exhausted its subdivision budget before reaching
    /// the requested tolerance.
    #[error("quadrature did not converge: {0}")]
    Convergence(String),

    /// The model-free discrete index definition produced a nonpositive gross
    /// return on a path.  Paths hitting this are flagged, not fatal at the
    /// batch level.
    #[error("discrete index gross return became nonpositive at step {step}")]
    NonpositiveIndexValue { step: usize },

    /// A statistic was requested on a sample too small to support it.
    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    /// An operation was called outside the hypotheses it is valid under
    /// (e.g. the rho-vega conversion with time-dependent coefficients).
    #[error("hypothesis violated: {0}")]
    HypothesisViolation(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
