use alloc::string::String;

/// Errors raised anywhere in the pipeline.
///
/// Variants keep the identity of the failing stage so that front ends can
/// map them onto distinct exit codes.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("valuation undefined: argument is zero")]
    ValuationUndefined,

    #[error("division by zero")]
    DivisionByZero,

    #[error("precision exhausted: need {needed} bits, have {available}")]
    PrecisionExhausted { needed: i64, available: i64 },

    #[error("quotient is not a 2-adic integer")]
    NonIntegralQuotient,

    #[error("invalid precision policy: {0}")]
    InvalidPolicy(&'static str),

    #[error("malformed matrix: {0}")]
    MalformedMatrix(&'static str),

    #[error("infinite invariant factor at precision {eta}")]
    InfiniteAtPrecision { eta: u32 },

    #[error("not a fundamental discriminant: {0}")]
    NonFundamentalDiscriminant(i64),

    #[error("principality witness invalid: {0}")]
    WitnessInvalid(String),

    #[error("unit rank mismatch: expected {expected}, got {got}")]
    UnitRankMismatch { expected: usize, got: usize },

    #[error("local factor mismatch: {0}")]
    LocalFactorMismatch(String),

    #[error("invalid field data: {0}")]
    InvalidField(String),

    #[error("unsupported local structure: {0}")]
    UnsupportedLocal(String),

    #[error("no primitive place in factor base")]
    NoPrimitivePlace,

    #[error("divisor not in span of the factor base")]
    NotInSpan,

    #[error("Gross violation at precision {eta}: {detail}")]
    GrossViolation { eta: u32, detail: String },

    #[error("undecidable at precision {eta}")]
    Undecidable { eta: u32 },

    #[error("inconsistent input: {0}")]
    Inconsistent(String),
}

pub type Result<T> = core::result::Result<T, Error>;
