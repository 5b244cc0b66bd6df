use crate::scenario::NodeId;

/// Errors produced by the planner library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse: {0}")]
    Parse(#[from] serde_json::Error),

    /// An invariant of the input data was violated; the message names the
    /// first violated invariant.
    #[error("validation: {0}")]
    Validation(String),

    #[error("coverage requires a nonempty master set")]
    EmptyMasters,

    #[error("unknown node id {0}")]
    UnknownNode(NodeId),

    #[error(
        "exhaustive enumeration refused: n={n} yields {count} clusterings (cap is n <= {cap})"
    )]
    EnumerationCap { n: usize, count: String, cap: usize },
}

impl Error {
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
