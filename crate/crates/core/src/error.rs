use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("invalid matrix shape: {0}")]
    InvalidShape(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian: max |A - A†| = {deviation:e} exceeds {tolerance:e}")]
    NotHermitian { deviation: f64, tolerance: f64 },

    #[error("Kossakowski matrix is not positive semidefinite: smallest eigenvalue {min_eigenvalue:e} is below -{tolerance:e}")]
    NotCompletelyPositive { min_eigenvalue: f64, tolerance: f64 },

    #[error("invalid rate {0}: rates must be finite and nonnegative")]
    InvalidRate(f64),

    #[error(
        "no eigenvalue within {tolerance:e} of zero (closest has modulus {closest:e}); the map is not trace preserving"
    )]
    NotTracePreserving { closest: f64, tolerance: f64 },

    #[error("spectrum is numerically defective; {0} is unsupported")]
    DefectiveSpectrum(&'static str),

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("invalid relaxation data: {0}")]
    InvalidRates(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    /// True for errors caused by the caller's input rather than by the numerics.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Numerical(_) | Error::NotTracePreserving { .. } | Error::DefectiveSpectrum(_))
    }
}
