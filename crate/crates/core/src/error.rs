use thiserror::Error;

use crate::linalg::LinalgError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("feature dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("timestamp {got} is not after the newest stored timestamp {newest}")]
    OutOfOrderTimestamp { newest: i64, got: i64 },
    #[error("no memory rows within the window around t={center}")]
    EmptyWindow { center: i64 },
    #[error("memory matrix is empty")]
    EmptyMemory,
    #[error("component count {n_c} out of range 1..={max}")]
    ComponentCount { n_c: usize, max: usize },
    #[error("memory is rank deficient below {n_c} components (sigma ratio {ratio:e})")]
    RankDeficient { n_c: usize, ratio: f64 },
    #[error("forgetting factor {0} outside (0, 1]")]
    ForgettingFactor(f64),
    #[error("clip with {rows} rows does not fit beside a {n_c}-row basis in dimension {dim}")]
    ClipTooLarge { rows: usize, n_c: usize, dim: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("bad magic: expected {expected:?}")]
    BadMagic { expected: &'static str },
    #[error("truncated file: {0}")]
    Truncated(String),
    #[error("malformed file: {0}")]
    Malformed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn dim(expected: usize, got: usize) -> Self {
        Error::DimensionMismatch { expected, got }
    }
}
