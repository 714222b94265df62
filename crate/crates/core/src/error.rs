use thiserror::Error;

/// Errors produced by the lattice toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid prime tower: {0}")]
    InvalidTower(String),

    #[error("integer overflow: {0}")]
    Overflow(String),

    #[error("{what} exceeds cap ({value} > {cap})")]
    CapExceeded { what: &'static str, value: u128, cap: u128 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("value {value} out of range [0, {modulus})")]
    OutOfRange { value: i128, modulus: u64 },

    #[error("invalid code: {0}")]
    InvalidCode(String),

    #[error("invalid map: {0}")]
    InvalidMap(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("homomorphism violated for ({a}, {b}) under {operation}")]
    HomomorphismViolation { a: u64, b: u64, operation: &'static str },

    #[error("invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn cap(what: &'static str, value: impl Into<u128>, cap: impl Into<u128>) -> Self {
        Error::CapExceeded {
            what,
            value: value.into(),
            cap: cap.into(),
        }
    }

    /// True for errors caused by a desk-scale size limit.
    pub fn is_cap(&self) -> bool {
        matches!(self, Error::CapExceeded { .. })
    }

    /// True for errors that indicate a broken mathematical invariant.
    pub fn is_invariant(&self) -> bool {
        matches!(self, Error::Invariant(_) | Error::HomomorphismViolation { .. })
    }
}
