use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("constraint set {{h = 0}} is empty")]
    InfeasibleConstraint,
    #[error("feasible set {{l <= h(x) <= u}} is empty")]
    InfeasibleProblem,
    #[error("Slater's condition fails: h takes no negative value")]
    SlaterViolation,
    #[error("no x with l < h(x) < u")]
    StrictFeasibilityViolation,
    #[error("h(x) = 0 does not imply f(x) >= 0")]
    E1Violated,
    #[error("hypothesis violated: {0}")]
    HypothesisViolation(String),
    #[error("hard-case primal recovery failed after {0} directions")]
    HardCaseRecoveryFailed(usize),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("no certificate found: {0}")]
    NoCertificate(String),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
}

pub type Result<T> = std::result::Result<T, Error>;
