use thiserror::Error;

/// Errors raised by the solvers, builders and harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(
        "Newton iteration did not converge after {iterations} iterations (residual {residual:e})"
    )]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("singular Jacobian at iterate {iterate:?}")]
    SingularJacobian { iterate: Vec<f64> },

    #[error("non-finite value encountered during {context}")]
    NonFiniteValue { context: &'static str },

    #[error("integration produced a non-finite state")]
    NonFiniteState,

    #[error("unknown quadrature rule `{0}`")]
    UnknownRule(String),

    #[error("unknown one-step method `{0}`")]
    UnknownMethod(String),

    #[error("unknown system `{0}`")]
    UnknownSystem(String),

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("damped oscillator is not underdamped (c^2 >= 4mk)")]
    Overdamped,

    #[error("constraint one-forms are rank deficient at q = {at:?}")]
    RankDeficientConstraints { at: Vec<f64> },

    #[error(
        "system `{0}` has a degenerate Lagrangian and can only be integrated by a Dirac stepper"
    )]
    DiracOnly(String),

    #[error("{0} is unavailable for this system")]
    Unavailable(&'static str),

    #[error("operation requires an unforced discrete triple")]
    ForcedTriple,

    #[error("refinement did not converge: last change {change:e} with {panels} panels")]
    RefinementFailed { change: f64, panels: usize },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
