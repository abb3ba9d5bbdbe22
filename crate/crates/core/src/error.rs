use std::path::PathBuf;

/// Everything that can go wrong inside the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("line {line}: duplicate id {id:?}")]
    DuplicateId { line: u64, id: String },

    #[error("line {line}: label given for unknown id {id:?}")]
    UnknownId { line: u64, id: String },

    #[error("item {0:?} has no label")]
    MissingLabel(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("degenerate layout: all points coincide")]
    DegenerateLayout,

    #[error("degenerate interaction: all moved points coincide in 2D")]
    DegenerateInteraction,

    #[error("degenerate embedding: all involved embeddings coincide")]
    DegenerateEmbedding,

    #[error("invalid interaction: {}", .0.join("; "))]
    InvalidInteraction(Vec<String>),

    #[error("anchor {0:?} is not among the moved points")]
    AnchorNotMoved(String),

    #[error("no anchor has both a non-empty positive and negative pool")]
    NoValidTriplets,

    #[error("triplet list is empty")]
    EmptyTriplets,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("evaluation needs at least {needed}, got {got}")]
    NotEnough { needed: &'static str, got: String },

    #[error("non-finite loss at epoch {epoch} (last finite loss {last_finite})")]
    NonFiniteLoss { epoch: usize, last_finite: f64 },

    #[error("session is busy with another interaction")]
    Busy,

    #[error("unknown {kind} {id:?}")]
    NotFound { kind: &'static str, id: String },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
