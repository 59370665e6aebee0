use thiserror::Error;

/// Errors produced by the model, solvers and oracles.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid collection spec: {0}")]
    InvalidSpec(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("state {state:?} is not part of the state space")]
    InvalidState { state: Vec<u64> },

    #[error("index {index} out of range for a state space of {len} states")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("state space of {states} states exceeds the limit of {limit}")]
    Capacity { states: u128, limit: u64 },

    #[error("{transient} transient states exceed the dense matrix limit of {limit}")]
    DenseLimit { transient: usize, limit: usize },

    #[error("zero diagonal entry of Id - Q at transient state {index}")]
    DegenerateDiagonal { index: usize },

    #[error("tail sum hit the cap of {cap} terms with remaining bound {bound:e}")]
    TailCapExceeded { cap: u64, bound: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
