use alloc::string::String;

use crate::targets::Phase;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("forced {phase} transition found no acceptable proposal in {max_tries} tries")]
    ForcedTransitionExhausted { phase: Phase, max_tries: u64 },

    #[error("matrix is not symmetric positive definite")]
    NotPositiveDefinite,

    #[error("need at least {needed} draws, got {got}")]
    TooFewDraws { needed: usize, got: usize },

    #[error("series has zero variance")]
    ZeroVariance,

    #[error("reference method has zero mean squared error")]
    ZeroReferenceMse,

    #[error("invalid block partition: {0}")]
    InvalidPartition(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = core::result::Result<T, Error>;
