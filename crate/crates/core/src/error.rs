use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("ratio too small: m_{next}/m_{index} < 3")]
    RatioTooSmall { index: usize, next: usize },

    #[error("moduli not increasing at index {index}")]
    NotIncreasing { index: usize },

    #[error("modulus m_{index} is not positive")]
    NonPositive { index: usize },

    #[error("modulus m_{index} requested but only {available} are defined")]
    ModulusOutOfRange { index: usize, available: usize },

    #[error("modulus m_{index} would need about {estimated_bits} bits (limit {limit})")]
    ModulusTooLarge {
        index: usize,
        estimated_bits: u64,
        limit: u64,
    },

    #[error("subsequence index j_{k} has about {bits} bits and cannot be addressed")]
    IndexTooLarge { k: usize, bits: u64 },

    #[error("insufficient precision: need {needed} bits, have {available}")]
    InsufficientPrecision { needed: u64, available: u64 },

    #[error("growth too slow for subsequence selection at k = {k}: {reason}")]
    GrowthTooSlow { k: usize, reason: String },

    #[error("selection too shallow: {needed} indices needed, {available} available")]
    SelectionTooShallow { needed: usize, available: usize },

    #[error("invalid angle: {0}")]
    InvalidAngle(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invariant violated: {0}")]
    InvariantViolated(String),
}

impl Error {
    /// True for errors that describe an unusable configuration rather than
    /// a failure during computation.
    pub fn is_configuration(&self) -> bool {
        matches!(
            self,
            Error::RatioTooSmall { .. }
                | Error::NotIncreasing { .. }
                | Error::NonPositive { .. }
                | Error::GrowthTooSlow { .. }
                | Error::SelectionTooShallow { .. }
                | Error::InvalidAngle(_)
                | Error::InvalidArgument(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
