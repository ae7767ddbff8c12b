use alloc::string::String;

use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("label value {value} in row {row} is not 0 or 1")]
    NonBinaryLabel { row: usize, value: f64 },

    #[error("column {0} has no observed values")]
    FullyMissingColumn(usize),

    #[error("column is constant; no spline basis can be built")]
    ConstantColumn,

    #[error("fold count {k} is invalid for {n} samples")]
    InvalidFoldCount { n: usize, k: usize },

    #[error("missing value for required covariate {0}")]
    MissingCovariate(usize),

    #[error("solver did not converge after {iterations} iterations (gradient norm {gradient_norm:e})")]
    NonConvergence {
        iterations: usize,
        gradient_norm: f64,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("invalid costs: {0}")]
    InvalidCosts(String),

    #[error("false-negative cost is not set; supply it or a target recall")]
    MissingFnCost,

    #[error("no positive samples available for the recall threshold")]
    NoPositives,

    #[error("stage index {target} must be larger than current stage {current}")]
    InvalidStage { current: usize, target: usize },

    #[error("invalid action in decision procedure: {0}")]
    InvalidAction(String),

    #[error("state space too large to enumerate ({0} states)")]
    StateSpaceTooLarge(usize),
}
