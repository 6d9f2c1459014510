use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate scene: {0}")]
    DegenerateScene(String),

    #[error("invalid scene: {0}")]
    InvalidScene(String),

    #[error("direction below the surface horizon")]
    BelowHorizon,

    #[error("all returns have zero amplitude")]
    ZeroSignal,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unsupported kernel size {0} (expected 3, 5 or 7)")]
    BadKernelSize(usize),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("feature layout mismatch: {0}")]
    LayoutMismatch(String),

    #[error("empty input")]
    EmptyInput,

    #[error("non-finite value in {0}")]
    NonFiniteData(&'static str),

    #[error("ground-truth depth is zero")]
    DivisionByZeroGroundTruth,

    #[error("bad magic bytes: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },

    #[error("unsupported format version {found} (expected {expected})")]
    VersionMismatch { expected: u32, found: u32 },

    #[error("file is truncated")]
    TruncatedFile,

    #[error("corrupt data: {0}")]
    Corrupt(String),

    #[error("invalid count: {0}")]
    InvalidCount(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("image {0} was used for training and cannot be evaluated")]
    TrainTestOverlap(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Whether the error stems from bad input rather than a defect in this crate.
    pub fn is_user_error(&self) -> bool {
        !matches!(self, Error::Corrupt(_) | Error::NonFiniteData(_))
    }
}
