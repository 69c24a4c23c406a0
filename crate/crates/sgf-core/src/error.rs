use thiserror::Error;

/// Errors surfaced by the simulator and training harness.
#[derive(Debug, Error)]
pub enum SgfError {
    /// Invalid or inconsistent configuration (bad key, bad value, violated invariant).
    #[error("config error: {0}")]
    Config(String),

    /// A numerical failure during training or evaluation (non-finite loss, singular system).
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Checkpoint could not be read or does not match the requested architecture.
    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    /// The oracle state space exceeds the enumerable bound.
    #[error("oracle state space overflow: {0}")]
    OracleOverflow(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SgfError>;
