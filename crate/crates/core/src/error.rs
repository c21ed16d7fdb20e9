use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors produced by the library. Display strings are short and stable so the
/// CLI can forward them as one-line machine-parsable diagnostics.
#[derive(Debug, Error)]
pub enum Error {
    #[error("no looks")]
    NoLooks,
    #[error("border anchor ({row}, {col})")]
    BorderAnchor { row: usize, col: usize },
    #[error("null target")]
    NullTarget,
    #[error("invalid simplex: {0}")]
    InvalidSimplex(String),
    #[error("invalid range: lo={lo} hi={hi}")]
    InvalidRange { lo: f64, hi: f64 },
    #[error("unknown class {0}")]
    UnknownClass(usize),
    #[error("matrix is not positive semi-definite")]
    NotPsd,
    #[error("invalid layout: {0}")]
    InvalidLayout(String),
    #[error("width mismatch: expected {expected}, got {got}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("empty data")]
    EmptyData,
    #[error("invalid edit: {0}")]
    InvalidEdit(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
