//! Error type shared by every module.

use thiserror::Error;

/// Everything that can go wrong inside the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("revenue {value} appears more than once")]
    DuplicateRevenue { value: f64 },
    #[error("product {product} has non-positive revenue {value}")]
    NonPositiveRevenue { product: usize, value: f64 },
    #[error("past assortment {assortment} does not contain the no-purchase option 0")]
    MissingNoPurchase { assortment: usize },
    #[error("frequency {value} of product {product} in past assortment {assortment} is outside [0, 1]")]
    FrequencyOutOfRange { assortment: usize, product: usize, value: f64 },
    #[error("frequencies of past assortment {assortment} sum to {sum}, expected 1")]
    FrequencySumViolation { assortment: usize, sum: f64 },
    #[error("radius eta = {0} is negative")]
    NegativeEta(f64),
    #[error("{what} index {index} out of range (size {len})")]
    IndexOutOfRange { what: &'static str, index: usize, len: usize },
    #[error("{what} of size {size} exceeds the limit {limit}")]
    TooLarge { what: &'static str, size: u128, limit: u128 },
    #[error("tuple entry {position} (product {product}) is not in its past assortment")]
    TupleOutOfSupport { position: usize, product: usize },
    #[error("{what} of size {size} exceeds the explosion guard {limit}")]
    ExplosionGuard { what: &'static str, size: u128, limit: u128 },
    #[error("minimum taken over an empty product set")]
    EmptyMinimum,
    #[error("operation needs exactly two past assortments, instance has {0}")]
    NotTwoAssortments(usize),
    #[error("past assortments are not nested")]
    NotNested,
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("{binaries} binary variables exceed the built-in solver limit {limit}")]
    GuardExceeded { binaries: usize, limit: usize },
    #[error("no ranking-based choice model is consistent with the data at the given radius")]
    InconsistentData,
    #[error("theta {theta} exceeds the robust optimum {ro}")]
    ThetaInfeasible { theta: f64, ro: f64 },
    #[error("flow is not conservative at vertex {vertex} (imbalance {imbalance})")]
    NonConservativeFlow { vertex: usize, imbalance: f64 },
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("malformed input: {0}")]
    Malformed(String),
}

pub type Result<T> = std::result::Result<T, Error>;
