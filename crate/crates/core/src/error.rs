use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("site {0} does not belong to the region")]
    SiteNotInRegion(i64),
    #[error("set is not a subset of the enclosing region: {0}")]
    NotSubset(String),
    #[error("region contains duplicate site {0}")]
    DuplicateSite(i64),
    #[error("empty region where a nonempty one is required: {0}")]
    EmptyRegion(String),
    #[error("region has {0} sites, more than the supported {1}")]
    RegionTooLarge(usize, usize),
    #[error("value out of range: {0}")]
    OutOfRange(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("operators have incompatible block layouts")]
    IncompatibleBlocks,
    #[error("operator is not symmetric (defect {0:e})")]
    NotHermitian(f64),
    #[error("energy {0} lies on the spectrum of the operator")]
    Singular(f64),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("enumeration of {0} configurations exceeds the limit {1}")]
    EnumerationTooLarge(u128, u128),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("too few usable samples: {0}")]
    InsufficientSamples(String),
    #[error("operation not supported for sparse blocks: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
