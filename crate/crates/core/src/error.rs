use thiserror::Error;

/// Errors raised by the analytical and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error(
        "divergent moment: E[rho^-{order}] needs more than {order} transmit antennas, got {antennas}"
    )]
    DivergentMoment { order: u32, antennas: usize },

    #[error("singular channel: bin (k={k}, l={l}) has gain magnitude {magnitude:e}")]
    SingularChannel { k: usize, l: usize, magnitude: f64 },

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("undefined variance: inverse-gamma shape {shape} must exceed 2")]
    UndefinedVariance { shape: f64 },

    #[error("evaluation did not converge within {0} terms")]
    NoConvergence(usize),

    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
