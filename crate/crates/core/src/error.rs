use std::io;

use crate::graph::VertexId;

/// Errors produced by the engines, builders and file readers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("vertex {0} is not alive")]
    DeadVertex(VertexId),

    #[error("vertex {0} already exists or was used before")]
    DuplicateVertex(VertexId),

    #[error("vertex {0} is both inserted and deleted in the same batch")]
    InsertDeleteConflict(VertexId),

    #[error("invalid edge ({u}, {v}, {w}): {reason}")]
    InvalidEdge {
        u: VertexId,
        v: VertexId,
        w: f64,
        reason: &'static str,
    },

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("linear system is singular: {0}")]
    Singular(String),

    #[error("{what} has {size} unlabeled vertices, above the dense-solve cap of {cap}")]
    SizeCap {
        what: String,
        size: usize,
        cap: usize,
    },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    /// True for errors caused by malformed or inconsistent inputs (as opposed
    /// to I/O failures).
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
