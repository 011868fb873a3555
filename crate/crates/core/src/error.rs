use thiserror::Error;

/// Errors produced by the dimension pipelines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u64),

    #[error("prime basis must be non-empty, strictly increasing and duplicate-free")]
    InvalidBasis,

    #[error("value bound {bound} exceeds the 63-bit element cap")]
    BoundOverflow { bound: u64 },

    #[error("semigroup table too short: need {needed}, have {available}")]
    TableTooShort { needed: u64, available: u64 },

    #[error("scale {scale} does not factor over the prime basis")]
    NonSmoothScale { scale: u64 },

    #[error("invalid rule: {0}")]
    InvalidRule(String),

    #[error("rule {rule} allows no digit tuple, so the shift is empty")]
    EmptyAllowedSet { rule: usize },

    #[error("digit {digit} is outside the alphabet of size {alphabet}")]
    InvalidDigit { digit: u64, alphabet: u64 },

    #[error("depth {requested} out of range (available {available})")]
    DepthOutOfRange { requested: usize, available: usize },

    #[error("unsupported method: {0}")]
    UnsupportedMethod(String),

    #[error("ratio bound rejected: {0}")]
    RatioBound(String),

    #[error("resource budget exceeded: {0}")]
    ResourceBudget(String),

    #[error("t-vector was solved in streaming mode; node values are not materialized")]
    NotMaterialized,

    #[error("{p} and {q} are not coprime")]
    NotCoprime { p: u64, q: u64 },

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("internal consistency check failed: {0}")]
    Inconsistent(String),

    #[error("spec file: {0}")]
    SpecFile(String),
}

pub type Result<T> = std::result::Result<T, Error>;
