use alloc::string::String;

use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("value {0} is not a probability in [0, 1]")]
    NotAProbability(f64),
    #[error("threshold {0} must lie strictly between 0 and 1")]
    InvalidThreshold(f64),
    #[error("at least two doses are required, got {0}")]
    TooFewDoses(usize),
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("dose {0} is out of range")]
    DoseOutOfRange(usize),
    #[error("dose {0} is the optimal dose")]
    OptimalDose(usize),
    #[error("dose {0} is as close to the threshold as the optimal dose")]
    DistanceTie(usize),
    #[error("optimal dose toxicity equals the threshold")]
    OptimalOnThreshold,
    #[error("prior probabilities must be strictly increasing inside (0, 1)")]
    InvalidSkeleton,
    #[error("breakpoint prior must be a probability vector")]
    InvalidBreakpointPrior,
    #[error("invalid chain configuration: {0}")]
    InvalidChain(&'static str),
    #[error("invalid design parameter: {0}")]
    InvalidParameter(String),
    #[error("budget {budget} is too small for {doses} doses")]
    BudgetTooSmall { budget: usize, doses: usize },
    #[error("empty sample set")]
    EmptySamples,
    #[error("expected {expected} outcomes, got {actual}")]
    OutcomeCount { expected: usize, actual: usize },
    #[error("efficacy outcome missing or unexpected")]
    EfficacyMismatch,
    #[error("trial has stopped")]
    Stopped,
    #[error("design requires efficacy priors")]
    MissingEfficacyModel,
}
