use std::fmt;

/// Failures surfaced by the CLI and the HTTP service.
#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error(transparent)]
    Core(#[from] polcbm::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("png encoding: {0}")]
    Png(String),
}

impl AppError {
    /// Stable machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            AppError::Core(e) => match e {
                polcbm::Error::Io(_) => "io",
                polcbm::Error::Json(_) | polcbm::Error::Format(_) => "format",
                polcbm::Error::InvalidConfig(_) => "invalid-config",
                _ => "invalid-input",
            },
            AppError::Io(_) => "io",
            AppError::Json(_) => "format",
            AppError::Argument(_) => "invalid-argument",
            AppError::Png(_) => "internal",
        }
    }
}

pub type AppResult<T> = Result<T, AppError>;

/// One-line JSON error record written to stderr.
pub struct ErrorLine<'a> {
    pub kind: &'a str,
    pub message: &'a str,
}

impl fmt::Display for ErrorLine<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = serde_json::json!({ "error": { "kind": self.kind, "message": self.message } });
        write!(f, "{v}")
    }
}
