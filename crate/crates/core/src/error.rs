use thiserror::Error;

/// Errors raised by the solver, the generators and the file parsers.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid action index {index} (instance has {count} actions)")]
    InvalidAction { index: usize, count: usize },

    #[error("length mismatch: expected {expected} payments, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("malformed rational literal {literal:?}: {reason}")]
    BadRational { literal: String, reason: String },

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("malformed linear program: {0}")]
    MalformedLp(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("{count} partitions exceed the ceiling of {ceiling}; pass an explicit override to run anyway")]
    PartitionCeiling { count: String, ceiling: u64 },

    #[error("succinctness gap undefined: the unrestricted optimum is zero")]
    UndefinedGap,

    #[error("multiplicative balancing refused: {0}")]
    MultiplicativeRefused(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("json: {0}")]
    Json(String),
}

pub type Result<T> = std::result::Result<T, Error>;
