use thiserror::Error;

/// Errors surfaced by the library, CLI and simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("infeasible configuration: {0}")]
    Infeasible(String),

    /// A call violated an API contract, e.g. asking for an integer-split
    /// placement when the cache size requires memory sharing.
    #[error("contract violation: {0}")]
    Contract(String),

    /// Internal consistency failure between caches, schemes and schedules.
    #[error("integrity check failed: {0}")]
    Integrity(String),

    #[error("decode incomplete: no codeword for subset {subset:?} from sender {sender}")]
    DecodeIncomplete { subset: Vec<usize>, sender: usize },

    #[error("out of range: {0}")]
    Range(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
