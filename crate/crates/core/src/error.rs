use std::io;

/// Errors produced anywhere in the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("non-finite sample at flat index {index}")]
    NonFinite { index: usize },
    #[error("spectrum is not Hermitian: max asymmetry {asymmetry:.3e} (relative to max |coeff| {scale:.3e})")]
    NotHermitian { asymmetry: f64, scale: f64 },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("index window violated: {0}")]
    IndexWindow(String),
    #[error("numerical blow-up at t = {t}: {reason}")]
    BlowUp { t: f64, reason: String },
    #[error("snapshot format: {0}")]
    Format(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

impl Error {
    /// True for errors caused by invalid input rather than by I/O or numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Self::InvalidGrid(_)
                | Self::NonFinite { .. }
                | Self::NotHermitian { .. }
                | Self::GridMismatch
                | Self::InvalidParameter(_)
                | Self::IndexWindow(_)
                | Self::Config(_)
        )
    }
}
