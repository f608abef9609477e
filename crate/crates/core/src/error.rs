use thiserror::Error;

/// Unified error type; `is_validation` separates bad inputs (CLI exit 2)
/// from numerical failures (CLI exit 3).
#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported dimension {0}: expected 3, 4, or 5")]
    UnsupportedDimension(usize),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("grid too coarse: {0}")]
    TooCoarse(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("scale {0} out of admissible range: {1}")]
    ScaleOutOfRange(f64, String),
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
    #[error("root not bracketed: {0}")]
    NoBracket(String),
    #[error("degenerate root: {0}")]
    DegenerateRoot(String),
    #[error("spectral solve failed: {0}")]
    Spectral(String),
    #[error("fit refused: {0}")]
    FitRefused(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed csv: {0}")]
    Csv(String),
}

impl Error {
    /// True for errors caused by bad inputs rather than numerical breakdown.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::UnsupportedDimension(_)
                | Error::GridMismatch(_)
                | Error::TooCoarse(_)
                | Error::Config(_)
                | Error::ScaleOutOfRange(..)
                | Error::Csv(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
