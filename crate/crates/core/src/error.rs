use thiserror::Error;

use crate::estimators::MethodKind;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not positive definite (pivot {index} = {pivot:e})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("invalid split: N = {n}, s = {s} gives {n_trn} train / {n_val} validation points")]
    InvalidSplit {
        n: usize,
        s: f64,
        n_trn: usize,
        n_val: usize,
    },

    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),

    #[error("invalid task distribution: {0}")]
    InvalidDistribution(String),

    #[error(
        "{method} normal equations are singular: T = {tasks}, N1 = {n_trn}, N2 = {n_val}, d = {dim}"
    )]
    Underdetermined {
        method: MethodKind,
        tasks: usize,
        n_trn: usize,
        n_val: usize,
        dim: usize,
    },

    #[error("mean {method} weight over the task pool is singular")]
    DegenerateDistribution { method: MethodKind },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("regime mismatch: {0}")]
    RegimeMismatch(String),
}

impl Error {
    /// True for failures of a linear system rather than of the inputs' shape or ranges.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotPositiveDefinite { .. }
                | Error::Underdetermined { .. }
                | Error::DegenerateDistribution { .. }
        )
    }
}
