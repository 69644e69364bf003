use thiserror::Error;

/// Errors raised while building or exercising a signal-alignment scheme.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is numerically singular (condition number {condition:.3e})")]
    SingularMatrix { condition: f64 },

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("channel draw stayed rank-deficient after {attempts} attempts")]
    ChannelDegenerate { attempts: usize },

    #[error(
        "pair block {block} needs {required} null-space dimensions but only {available} exist"
    )]
    InsufficientNullSpace {
        block: usize,
        required: usize,
        available: usize,
    },

    #[error("effective channel of node {node} is singular")]
    SingularEffectiveChannel { node: usize },

    #[error("generalized signal alignment is infeasible for M = {m}, N = {n}")]
    Infeasible { m: usize, n: usize },

    #[error("need at least 2 sweep points in the fit window, found {found}")]
    InsufficientPoints { found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
