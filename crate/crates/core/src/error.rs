use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("frequency #{index} = {value} lies outside (0, {omega_d}]")]
    FrequencyOutOfRange { index: usize, value: f64, omega_d: f64 },

    #[error("length {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("site {site} out of range for {n_spins} spins")]
    SiteOutOfRange { site: usize, n_spins: usize },

    #[error("pauli term repeats site {0}")]
    RepeatedSite(usize),

    #[error("state is not normalized (norm = {norm})")]
    NotNormalized { norm: f64 },

    #[error("dense oracle refused: dimension {dim} exceeds cap {cap}")]
    DenseCapExceeded { dim: usize, cap: usize },

    #[error("lanczos did not converge after {matvecs} matvecs; residuals {residuals:?}")]
    NotConverged { matvecs: usize, residuals: Vec<f64> },

    #[error("tridiagonal QL iteration failed to converge")]
    EigenIteration,

    #[error("step size underflow at t = {t} (h = {h})")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("integration exceeded {0} steps")]
    TooManySteps(usize),

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("count mismatch: {what} has {found}, expected {expected}")]
    CountMismatch { what: &'static str, expected: usize, found: usize },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}
