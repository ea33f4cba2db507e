use thiserror::Error;

/// Errors raised by model construction, validation and bound evaluation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid density: {reason}")]
    InvalidDensity {
        reason: String,
        /// Point (interval coordinate or state index) where a negative value was found.
        witness: Option<f64>,
        /// Computed integral when the normalization check failed.
        integral: Option<f64>,
    },

    #[error("rejected input: {0}")]
    InvalidInput(String),

    #[error("index {index} out of range (available {available})")]
    Index { index: usize, available: usize },

    #[error("invalid exponents: reciprocals sum to {sum}, expected 1")]
    InvalidExponents { sum: f64 },

    #[error("invalid mixing profile: {0}")]
    InvalidProfile(String),

    #[error("invalid normalizer {0}: must be positive")]
    InvalidNormalizer(f64),

    #[error("invalid pairing: {0}")]
    InvalidPairing(String),

    #[error("enumeration needs {required} atoms, cap is {cap}")]
    EnumerationCap { required: usize, cap: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("grid resolution too coarse: {0}")]
    Resolution(String),

    #[error("norm class mismatch: mixing profile uses {profile}, density norm is {tilt}")]
    NormMismatch { profile: String, tilt: String },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("internal numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
