use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("capacity must be at least 1, got {0}")]
    InvalidCapacity(usize),

    #[error("node {node} is out of range for capacity {capacity}")]
    InvalidNode { node: usize, capacity: usize },

    #[error("field `{field}` cannot be set to Absent")]
    AbsentNotAllowed { field: &'static str },

    #[error("cannot place {items} items in a heap of capacity {capacity}")]
    TooManyItems { items: usize, capacity: usize },

    #[error("malformed snapshot: {0}")]
    Snapshot(String),

    #[error("malformed history: {0}")]
    History(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
