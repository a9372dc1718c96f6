use thiserror::Error;

/// Errors surfaced by instance construction, solvers and oracles.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("vertex enumeration budget exceeded: C({m}, {d}) = {combinations:.3e} > {limit:.0e}")]
    CombinatorialBudget {
        m: usize,
        d: usize,
        combinations: f64,
        limit: f64,
    },

    #[error("pivot cap {cap} exceeded in simplex ({context})")]
    PivotCap { cap: usize, context: String },

    #[error("oracle retry budget exhausted after {rounds} rounds")]
    RetryBudgetExceeded { rounds: usize },

    #[error("oracle contract broken: weighted violation {violation} > target {target}")]
    OracleContractBroken { violation: f64, target: f64 },

    #[error("no feasible iterate found by the framework run")]
    NoFeasibleIterate,

    #[error("internal invariant violated: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
