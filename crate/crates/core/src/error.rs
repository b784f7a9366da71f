use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GbError {
    #[error("invalid layer stack: {0}")]
    InvalidStack(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: expected {expected:?}, got {actual:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("rectangle {0:?} lies outside the table bounds")]
    OutOfBounds((isize, isize, isize, isize)),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate shape: {0}")]
    DegenerateShape(String),

    #[error("not a flow file")]
    NotAFlowFile,

    #[error("corrupt file: {0}")]
    Corrupt(String),

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, GbError>;
