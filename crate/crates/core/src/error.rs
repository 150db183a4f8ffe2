use thiserror::Error;

use crate::expr::ParseError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value while evaluating at x = {x}")]
    NonFinite { x: f64 },

    #[error("orbit left the domain at step {step} (x = {x})")]
    Escaped { x: f64, step: usize },

    #[error("undefined: {0}")]
    Undefined(String),

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("derivative vanishes inside the interval near x = {x}")]
    VanishingOnInterval { x: f64 },

    #[error("orbit point {x} fails its own convergence test")]
    DegenerateBasin { x: f64 },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
