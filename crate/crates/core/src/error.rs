use thiserror::Error;

/// Errors produced by the set constructors, the restriction objective and
/// the drivers built on top of them.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid digit set: {0}")]
    InvalidDigitSet(String),

    #[error("cannot parse digit set {input:?}: {reason}")]
    Parse { input: String, reason: String },

    #[error("overflow risk: {0} exceeds the 64-bit integer range")]
    OverflowRisk(String),

    #[error("level {level} is not divisible by regrouping factor {t}")]
    LevelNotDivisible { level: u32, t: u32 },

    #[error("enumeration of {required} items exceeds the budget of {budget}")]
    BudgetExceeded { required: u128, budget: u128 },

    #[error("weight vector is identically zero")]
    ZeroVector,

    #[error("objective became non-finite")]
    NonFinite,

    #[error("starting vector must be strictly positive on the support")]
    NotStrictlyPositive,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("map is not a bijection between the given sets: {0}")]
    NotABijection(String),

    #[error("generator {generator} has carryover for n = {n}")]
    CarryoverPresent { generator: String, n: u32 },

    #[error("level too small: base^t = {qt} must exceed n = {n}")]
    LevelTooSmall { qt: u128, n: u32 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("check failed: {0}")]
    CheckFailed(String),
}

pub type Result<T> = std::result::Result<T, Error>;
