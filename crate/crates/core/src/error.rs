use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GasketError {
    #[error("value {0} is outside (0, 1]")]
    ValueOutOfRange(f64),
    #[error("invalid dyadic sequence: {0}")]
    InvalidSequence(String),
    #[error("sequence too short: need depth {needed}, have {have}")]
    SequenceTooShort { needed: usize, have: usize },
    #[error("word of length {len} is too deep for truncation depth {depth}")]
    WordTooDeep { len: usize, depth: usize },
    #[error("invalid word or address: {0}")]
    InvalidWord(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("mesh level {requested} exceeds the configured maximum {max}")]
    LevelTooLarge { requested: u32, max: u32 },
    #[error("mesh level {have} is too coarse; need at least {needed}")]
    LevelTooSmall { needed: u32, have: u32 },
    #[error("mesh function belongs to level {found}, expected {expected}")]
    LevelMismatch { expected: u32, found: u32 },
    #[error("linear system is singular: {0}")]
    Singular(String),
    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("traces disagree on the cut by {0:e}")]
    TraceMismatch(f64),
    #[error("nonconsecutive condition fails or is undecidable at this truncation")]
    ConsecutiveRun,
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, GasketError>;
