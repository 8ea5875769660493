use std::path::PathBuf;

use thiserror::Error;

/// Errors raised while loading inputs, compiling queries or ranking.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A record in an input file failed validation. `line` is 1-based.
    #[error("{path}:{line}: {message}")]
    InvalidRecord {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("concept {concept} is not mentioned in document {doc_id}")]
    AbsentConcept { concept: String, doc_id: String },

    #[error("no specificity configured for predicate {0:?}")]
    MissingSpecificity(String),

    #[error("term {0:?} does not translate to any concept")]
    UntranslatableTerm(String),

    #[error("topic could not be translated: {0}")]
    UntranslatableTopic(String),

    #[error("topics with {0} components are not supported (at most 4)")]
    UnsupportedArity(usize),

    #[error("invalid query: {0}")]
    InvalidQuery(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("ontology contains a cycle through {0}")]
    OntologyCycle(String),

    #[error("internal inconsistency: {0}")]
    Inconsistent(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn record(
        path: impl Into<PathBuf>,
        line: usize,
        message: impl Into<String>,
    ) -> Self {
        Error::InvalidRecord {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    /// True for failures caused by an internal invariant breaking rather than bad input.
    pub fn is_internal(&self) -> bool {
        matches!(self, Error::Inconsistent(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
