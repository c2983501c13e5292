use thiserror::Error;

use crate::pipeline::NetworkIntent;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("unresolved prefix `{prefix}:` at line {line}, column {column}")]
    UnresolvedPrefix {
        prefix: String,
        line: usize,
        column: usize,
    },

    #[error("literal in subject position at line {line}, column {column}")]
    LiteralSubject { line: usize, column: usize },

    #[error("invalid triple: {0}")]
    InvalidTriple(String),

    #[error("placeholder term `???` present where a complete graph is required")]
    PlaceholderPresent,

    #[error("unknown entity {0}")]
    UnknownEntity(String),

    #[error("unknown relation {0}")]
    UnknownRelation(String),

    #[error("{kind} index {index} out of range (size {len})")]
    IndexOutOfRange {
        kind: &'static str,
        index: usize,
        len: usize,
    },

    #[error("vocabulary is empty")]
    EmptyVocab,

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("model vocabulary does not match the dataset vocabulary")]
    VocabMismatch,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("training diverged at epoch {epoch}: {detail}")]
    Diverged { epoch: usize, detail: String },

    #[error("model document: {0}")]
    ModelFormat(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("blueprint: {0}")]
    Blueprint(String),

    #[error("corpus line {line}: {message}")]
    Corpus { line: usize, message: String },

    #[error("step E: slot {slot} has no admissible candidate among the top {k} predictions")]
    UnresolvedSlot { slot: u32, k: usize },

    #[error("step F: intent failed verification ({} triple(s) below threshold)", .0.failing().len())]
    NotVerified(Box<NetworkIntent>),

    #[error("infeasible generator spec: {0}")]
    Infeasible(String),
}

impl Error {
    /// Stable, machine-parsable failure category.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Syntax { .. }
            | Error::UnresolvedPrefix { .. }
            | Error::LiteralSubject { .. }
            | Error::InvalidTriple(_)
            | Error::InvalidConfig(_)
            | Error::ModelFormat(_)
            | Error::Json(_)
            | Error::Blueprint(_)
            | Error::Corpus { .. }
            | Error::Infeasible(_) => "parse",
            Error::PlaceholderPresent
            | Error::UnknownEntity(_)
            | Error::UnknownRelation(_)
            | Error::IndexOutOfRange { .. }
            | Error::EmptyVocab
            | Error::EmptyInput(_)
            | Error::VocabMismatch => "vocab",
            Error::Diverged { .. } => "train-diverged",
            Error::UnresolvedSlot { .. } => "unresolved-slot",
            Error::NotVerified(_) => "verification-failed",
        }
    }
}
