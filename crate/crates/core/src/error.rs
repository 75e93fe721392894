use thiserror::Error;

use crate::certify::ReductionTrace;

/// Errors raised by every engine in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("cannot shift the time variable by itself")]
    ShiftByTime,
    #[error("variable {0} has no value in the assignment")]
    MissingVariable(String),
    #[error("exponent {0} is not integer-valued")]
    NotIntegerValued(String),
    #[error("value {0} is not an integer")]
    NonIntegerValue(String),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("matrix is not unitriangular: {0}")]
    NotUnitriangular(String),
    #[error("generator `{0}` is not bound")]
    UnboundGenerator(String),
    #[error("the complete reduction is not defined for a system of size 1")]
    CompleteReductionUndefined,
    #[error("empty system")]
    EmptySystem,
    #[error("degree violation: {0}")]
    DegreeViolation(String),
    #[error("step budget of {budget} exhausted after {steps} steps")]
    BudgetExhausted {
        budget: usize,
        steps: usize,
        partial: Box<ReductionTrace>,
    },
    #[error("trace verification failed at step {step}: {reason}")]
    TraceMismatch { step: usize, reason: String },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
        expected: Vec<String>,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("convex solver failed: {0}")]
    Solver(String),
    #[error("separation verification failed: {0}")]
    SeparationCheck(String),
    #[error("energy bound violated after {0} rounds")]
    EnergyBoundViolated(usize),
    #[error("search cap {cap} exceeded (last window max {last_max})")]
    SearchCapExceeded {
        cap: u64,
        last_max: f64,
        probes: Vec<(u64, f64)>,
    },
    #[error("size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("{0}")]
    Format(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
