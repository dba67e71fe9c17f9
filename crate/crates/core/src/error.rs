use thiserror::Error;

#[derive(Debug, Error)]
pub enum PlpError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("singular input: {0}")]
    SingularInput(String),

    #[error("numeric failure: {message} (after {iterations} iterations)")]
    NumericFailure { message: String, iterations: usize },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl PlpError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        PlpError::InvalidArgument(msg.into())
    }

    pub(crate) fn singular(msg: impl Into<String>) -> Self {
        PlpError::SingularInput(msg.into())
    }

    /// True for failures caused by the numbers rather than by how the
    /// operation was called.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            PlpError::SingularInput(_) | PlpError::NumericFailure { .. } | PlpError::DegenerateData(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, PlpError>;
