use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid sensor model: {0}")]
    Model(String),

    #[error("invalid scene: {0}")]
    Scene(String),

    #[error("invalid scenario: {0}")]
    Scenario(String),

    #[error(transparent)]
    Core(#[from] viko_core::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type SimResult<T> = Result<T, SimError>;
