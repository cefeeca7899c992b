use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum Error {
    #[error("invalid pattern spec: {0}")]
    InvalidSpec(String),
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: String, actual: String },
    #[error("expected a {expected} pattern set")]
    WrongDomain { expected: &'static str },
    #[error("coordinate ({x}, {y}) outside {width}x{height} grid")]
    OutOfRange {
        x: usize,
        y: usize,
        width: usize,
        height: usize,
    },
    #[error("unsupported DFT bin {k}: {reason}")]
    UnsupportedBin { k: usize, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
