use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),

    #[error("resolution exceeded: level {level} is finer than the finest resolvable level {max}")]
    ResolutionExceeded { level: i64, max: i64 },

    #[error("invalid exponent: {0}")]
    InvalidExponent(String),

    #[error("conjugate exponent undefined: exponent reaches 1 at grid point {index}")]
    ConjugateUndefined { index: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("solver failure: no convergence after {iterations} iterations")]
    SolverFailure { iterations: usize },

    #[error("precondition violated: {0}")]
    PreconditionViolation(String),

    #[error("admissibility failure: {0}")]
    AdmissibilityFailure(String),

    #[error("invalid subset selection: {0}")]
    InvalidSelection(String),

    #[error("unsupported parameters: {0}")]
    UnsupportedParameters(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
