use thiserror::Error;

/// Errors produced by the codec, decoders and models.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unsupported field degree {0} (expected 1..=8)")]
    FieldDegree(u32),
    #[error("polynomial {poly:#x} is not irreducible of degree {degree}")]
    ReduciblePolynomial { poly: u32, degree: u32 },
    #[error("element {value} is outside GF({q})")]
    ElementRange { value: u32, q: usize },
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    #[error("length {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("length mismatch: expected {expected}, got {actual}")]
    Length { expected: usize, actual: usize },
    #[error("permutation multiplier must be nonzero")]
    ZeroMultiplier,
    #[error("log vector has no finite entry")]
    NoFiniteEntry,
    #[error("invalid code parameters: {0}")]
    InvalidCode(String),
    #[error("symbol {index} is frozen to {expected} but the message holds {actual}")]
    FrozenViolation { index: usize, expected: u8, actual: u8 },
    #[error("unsupported split factor {0}")]
    SplitFactor(usize),
    #[error("invalid decoder configuration: {0}")]
    DecoderConfig(String),
    #[error("symbol {requested} requested out of order (next is {next})")]
    OutOfOrder { requested: usize, next: usize },
    #[error("empty path list")]
    EmptyList,
    #[error("no valid path at level {level}")]
    FrameFailure { level: usize },
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
