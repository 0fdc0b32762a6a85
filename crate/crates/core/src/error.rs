use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("matrix is not Hermitian (relative asymmetry {asymmetry:.3e})")]
    NonHermitian { asymmetry: f64 },

    #[error("sample is empty")]
    EmptySample,

    #[error("Newton-Raphson did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("region too small: need {needed} observations, have {available}")]
    RegionTooSmall { needed: usize, available: usize },

    #[error("raster geometry mismatch: {0}")]
    GeometryMismatch(String),

    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: String, found: String },

    #[error("unsupported format version {0}")]
    BadVersion(u16),

    #[error("truncated payload: expected {expected} bytes, found {actual}")]
    TruncatedPayload { expected: usize, actual: usize },

    #[error("pixel ({row}, {col}) is not Hermitian")]
    NonHermitianPixel { row: usize, col: usize },

    #[error("malformed input: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for failures of the numerical kind (as opposed to bad input data).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotPositiveDefinite | Error::Domain(_) | Error::NoConvergence { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
