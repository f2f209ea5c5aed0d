use thiserror::Error;

/// Errors produced by the hydrorl core library.
#[derive(Debug, Error)]
pub enum Error {
    /// Vector/matrix shapes do not line up with the network or environment configuration.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A value fell outside its documented domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// An operation was invoked with an inconsistent or incomplete configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// Training produced a non-finite loss; names the term that exploded.
    #[error("training diverged: {term} became non-finite at step {step}")]
    Diverged { term: String, step: usize },

    /// A stepping scheme refused to advance (e.g. CFL violation).
    #[error("time-step error: {0}")]
    TimeStep(String),

    /// An episode was advanced after termination.
    #[error("contract violation: {0}")]
    Contract(String),

    /// The LLM backend failed after retries and no fallback was permitted.
    #[error("backend error: {0}")]
    Backend(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
