use thiserror::Error;

/// Domain errors shared across the crate.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    /// An operation that is singular on constants was applied to a function
    /// with a nonzero mean sector.
    #[error("mean mode unsupported: {0}")]
    MeanModeUnsupported(String),

    /// Field correlation functions were requested from a state that only
    /// assigns values to Weyl exponentials.
    #[error("unsupported state for this operation: {0}")]
    UnsupportedState(String),

    /// Gram matrix degree outside the supported range.
    #[error("degree {0} unsupported (expected 1..=3)")]
    DegreeUnsupported(usize),

    /// A Weyl correlation whose time dependence leaves the quasi-polynomial
    /// class (handled by the sampled fallback at a higher level).
    #[error("correlation is not quasi-polynomial in time: {0}")]
    NotQuasiPolynomial(String),

    /// Construction-time validation failure (grid parameters, reality
    /// invariant, measure atoms, nesting depth).
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
