use thiserror::Error;

use crate::expr::ExprError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("metric is not positive definite at x = {x:?} (pivot {pivot:e})")]
    NotPositiveDefinite { x: Vec<f64>, pivot: f64 },
    #[error("metric components are not symmetric: a[{i}][{j}] differs from a[{j}][{i}]")]
    AsymmetricMetric { i: usize, j: usize },
    #[error("direction y must be nonzero")]
    ZeroDirection,
    #[error("profile {family} is outside its domain at s = {s}: {message}")]
    ProfileDomain {
        family: String,
        s: f64,
        message: String,
    },
    #[error("denominator {which} vanishes (value {value:e})")]
    SingularDenominator { which: &'static str, value: f64 },
    #[error("expansion denominator margin violated: {which} = {value:e}")]
    Margin { which: &'static str, value: f64 },
    #[error("sample set too small: {got} samples, need at least {needed}")]
    TooFewSamples { got: usize, needed: usize },
    #[error("sample set is rank deficient: rank {rank}, need {needed}")]
    RankDeficient { rank: usize, needed: usize },
    #[error("sample {index} leaves the validity region: {message}")]
    Validity { index: usize, message: String },
    #[error("{table} has no index {k}")]
    IndexOutOfRange { table: &'static str, k: usize },
    #[error("{table}_{k} is within range but is not printed in the source tables")]
    NotPrinted { table: &'static str, k: usize },
    #[error("index pair ({i}, {j}) is out of range for dimension {n}")]
    PairOutOfRange { i: usize, j: usize, n: usize },
    #[error("the expansion tables only hold for the Matsumoto profile, not {0}")]
    UnsupportedFamily(String),
    #[error("hypothesis not certified: {0}")]
    HypothesisNotCertified(String),
    #[error("term data: {0}")]
    TermData(String),
}

pub type Result<T> = std::result::Result<T, Error>;
