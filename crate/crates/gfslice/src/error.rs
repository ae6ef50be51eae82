use thiserror::Error;

/// Errors produced by field construction, packing, arithmetic, parsing and the
/// distance engine. Internal-invariant violations get their own variant so
/// callers can distinguish "bad input" from "bug".
#[derive(Debug, Error)]
pub enum Error {
    #[error("modulus {0} is not a prime >= 3")]
    NotPrime(u64),
    #[error("modulus {0} does not fit the supported range (p < 2^31)")]
    ModulusTooLarge(u64),
    #[error("digit {digit} is not a residue mod {p}")]
    DigitOutOfRange { digit: u64, p: u64 },
    #[error("operands belong to different fields (p={left} vs p={right})")]
    FieldMismatch { left: u64, right: u64 },
    #[error("operands have different lengths ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("operation requires a Mersenne modulus, got p={0}")]
    NotMersenne(u64),
    #[error("operation requires a non-Mersenne modulus, got p={0}")]
    IsMersenne(u64),
    #[error("operation is specific to p={expected}, got p={got}")]
    WrongField { expected: u64, got: u64 },
    #[error("plane shift {shift} out of range for {planes} planes")]
    ShiftOutOfRange { shift: u32, planes: u32 },
    #[error("scalar {scalar} out of range 1..{p}")]
    ScalarOutOfRange { scalar: u64, p: u64 },
    #[error("matrix text, line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("matrix has rank {rank}, expected full rank {k}")]
    RankDeficient { rank: usize, k: usize },
    #[error("could not draw {k} independent rows after {attempts} attempts")]
    RetryLimit { k: usize, attempts: usize },
    #[error("brute force would evaluate {needed} codewords, budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
