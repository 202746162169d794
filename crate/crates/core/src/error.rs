use thiserror::Error;

/// Errors surfaced by simulation setup and the experiment pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid or inconsistent configuration values.
    #[error("configuration error: {0}")]
    Config(String),

    /// Robot placement failed after the bounded rejection budget.
    #[error("spawn failed: could not place {placed} of {requested} robots within spawn_radius {spawn_radius} m (spawn area too small)")]
    SpawnFailure {
        requested: u32,
        placed: u32,
        spawn_radius: f64,
    },

    /// A batch finished but some runs panicked.
    #[error("{failed} of {total} runs failed")]
    RunsFailed { failed: usize, total: usize },

    /// A run exceeded its wall-clock budget.
    #[error("run exceeded its wall-clock budget at step {step}")]
    Timeout { step: u64 },

    /// Malformed or empty input to a statistics routine.
    #[error("stats error: {0}")]
    Stats(String),

    /// Serialization / deserialization failure.
    #[error("serialization error: {0}")]
    Serde(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
