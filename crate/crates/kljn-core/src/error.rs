use thiserror::Error;

use crate::circuit::LoopState;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("at least {required} samples required, got {got}")]
    TooFewSamples { required: usize, got: usize },

    #[error("degenerate trace: {0}")]
    DegenerateTrace(String),

    #[error("{0:?} is not a mixed state; defined for LH and HL only")]
    NotMixed(LoopState),

    #[error("only {got} tail samples above the quantile; increase n or lower q")]
    TooFewTailSamples { got: usize },

    #[error("period cap of {cap} reached with only {kept} of {requested} kept bits")]
    PeriodCapExceeded {
        cap: usize,
        kept: usize,
        requested: usize,
    },

    #[error("non-finite variance estimate")]
    NonFiniteVariance,
}

pub type Result<T> = std::result::Result<T, Error>;
