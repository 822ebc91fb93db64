use thiserror::Error;

/// Errors surfaced by the geometry, filtering and gradient pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("primitive lies behind the camera near plane")]
    CulledBehindCamera,

    #[error("no camera sees the primitive in front of its near plane")]
    NoVisibleView,

    #[error("value outside the valid domain: {what}")]
    DomainError { what: String },

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    #[error("image too small: SSIM needs min dimension {min}, got {got}")]
    TooSmall { min: usize, got: usize },

    #[error("forward state does not match backward inputs: {reason}")]
    MismatchedForward { reason: String },

    #[error("invalid camera: {reason}")]
    InvalidCamera { reason: String },

    #[error("invalid scene: {reason}")]
    InvalidScene { reason: String },

    #[error("invalid manifest: {reason}")]
    InvalidManifest { reason: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
