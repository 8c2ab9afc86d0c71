use std::path::PathBuf;

use thiserror::Error;

use crate::kripke::StateId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A partition file line that does not conform to the record format.
    #[error("{file}:{line}: {msg}")]
    StoreParse {
        file: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("duplicate state id {id}")]
    DuplicateId { id: StateId },

    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("formula syntax error at byte {pos}: {msg}")]
    FormulaSyntax { pos: usize, msg: String },

    #[error("unknown place `{0}`")]
    UnknownPlace(String),

    #[error("net description line {line}: {msg}")]
    NetParse { line: usize, msg: String },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("state bound {bound} exceeded after discovering {found} states")]
    BoundExceeded { bound: usize, found: usize },

    /// Two distinct canonical states hashed to the same identifier.
    #[error("state id collision on {id}")]
    IdCollision { id: StateId },

    /// A map or reduce function failed; `key` is the key being processed
    /// when the failure happened, if one was in scope.
    #[error("job `{job}` failed: {msg}")]
    Job {
        job: String,
        key: Option<StateId>,
        msg: String,
    },

    #[error("internal error: {0}")]
    Internal(String),

    #[error("{path}: {source}")]
    IoAt {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn io_at(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
        let path = path.into();
        move |source| Error::IoAt { path, source }
    }
}
