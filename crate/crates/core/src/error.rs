use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("calibration fit failed: {0}")]
    Fit(String),

    #[error("insufficient data: need at least {needed} point pairs, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("segmentation unavailable: {0}")]
    SegmentationUnavailable(String),

    #[error("reference initialization failed: {0}")]
    Init(String),

    #[error("image codec error: {0}")]
    Image(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
