use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("field contains non-finite values")]
    NonFinite,

    #[error("kernel time t = {time} outside the validity window (scale {scale:.4} > L/6 = {limit:.4})")]
    KernelWindow { time: f64, scale: f64, limit: f64 },

    #[error("kernel has a negative excursion {min:.3e} below {limit:.0e}")]
    NegativeExcursion { min: f64, limit: f64 },

    #[error("imaginary residue {residue:.3e} exceeds {limit:.0e}")]
    ImaginaryResidue { residue: f64, limit: f64 },

    #[error("evaluation point {0:?} lies outside the central half of the domain")]
    BoundaryPoint(Vec<f64>),

    #[error("insufficient tail room: boundary value {boundary:.3e} exceeds {limit:.0e} of the center value")]
    InsufficientTail { boundary: f64, limit: f64 },

    #[error("Picard iteration did not reach tolerance {tol:.1e} in {iters} iterations (last increment {last:.3e})")]
    ToleranceFailure { tol: f64, iters: usize, last: f64 },

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
