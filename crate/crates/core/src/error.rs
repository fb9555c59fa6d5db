use alloc::string::String;

/// Errors raised by the solvers, model builders and estimators.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("stage {stage} outside [{t0}, {horizon})")]
    StageOutOfRange { stage: usize, t0: usize, horizon: usize },
    #[error("point is not on the state grid")]
    NotOnGrid,
    #[error("objective is not additive; augment the problem first")]
    NotAdditive,
    #[error("no feasible trajectory from the initial state at stage {stage}")]
    Infeasible { stage: usize },
    #[error("policy undefined at stage {stage}, state {state}")]
    PolicyUndefined { stage: usize, state: usize },
    #[error("aggregate update {value} leaves the grid of axis {axis} at stage {stage}")]
    AggregateRange { stage: usize, axis: usize, value: f64 },
    #[error("successor {value} is off the grid of axis {axis} at stage {stage}")]
    OffGrid { stage: usize, axis: usize, value: f64 },
    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("enumeration of {count} input sequences exceeds the cap of {cap}")]
    EnumerationCap { count: u128, cap: u64 },
    #[error("zero standard deviation for variable {variable} at step {step}")]
    ZeroVariance { variable: usize, step: usize },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("matrix is not symmetric (max deviation {0})")]
    NotSymmetric(f64),
    #[error("matrix is singular")]
    Singular,
    #[error("problem too large: {states} states exceeds the cap of {cap}")]
    TooLarge { states: usize, cap: usize },
}

pub type Result<T> = core::result::Result<T, Error>;
