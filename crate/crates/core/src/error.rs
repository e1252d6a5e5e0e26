use thiserror::Error;

/// Errors produced by the library. The CLI maps [`Error::BoundViolated`] and
/// [`Error::FeasibilityViolated`] to exit code 1 and every other variant to 2.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("ground set too large: {what} supports at most {limit} elements, got {n}")]
    TooLarge { what: &'static str, limit: usize, n: usize },

    #[error("ground set mismatch: expected {expected} elements, got {got}")]
    GroundMismatch { expected: usize, got: usize },

    #[error("point is outside the scaled polytope: {0}")]
    OutsidePolytope(String),

    #[error("not a matroid: {0}")]
    NotAMatroid(String),

    #[error("not submodular: {0}")]
    NotSubmodular(String),

    #[error("chain refinement failed at level {level}: {reason}")]
    ChainRefinement { level: usize, reason: String },

    #[error("randomness of this scheme cannot be enumerated: {0}")]
    NotEnumerable(String),

    #[error("linear program is infeasible")]
    Infeasible,

    #[error("linear program is unbounded")]
    Unbounded,

    #[error("feasibility violated: {0}")]
    FeasibilityViolated(String),

    #[error("bound violated: {0}")]
    BoundViolated(String),

    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
