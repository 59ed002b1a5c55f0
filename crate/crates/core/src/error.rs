use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("tension T = {tension} is not below 3/l^2 = {limit}")]
    SupercriticalTension { tension: f64, limit: f64 },

    #[error("inadmissible Lyapunov weights: {0}")]
    InadmissibleWeights(String),

    #[error("initial history does not match the initial velocity: deviation {deviation:e} exceeds tolerance {tolerance:e}")]
    IncompatibleHistory { deviation: f64, tolerance: f64 },

    #[error("initial data violates the clamped condition at x = 0: {0}")]
    UnclampedInitialData(String),

    #[error("non-finite value after step {step}")]
    NonFinite { step: usize },

    #[error("singular linear system (determinant {determinant:e})")]
    Singular { determinant: f64 },

    #[error("decay fit: {0}")]
    Fit(String),

    #[error("trace: {0}")]
    Trace(String),

    #[error("invalid range: {0}")]
    InvalidRange(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            what,
            expected,
            found,
        })
    }
}
