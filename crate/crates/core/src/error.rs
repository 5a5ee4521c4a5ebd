use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure class, used by the command line front end to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Invariant,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: line {line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    #[error("duplicate article id `{0}`")]
    DuplicateId(String),
    #[error("article `{0}` has no chapters")]
    EmptyArticle(String),
    #[error("invalid article `{id}`: {msg}")]
    InvalidArticle { id: String, msg: String },
    #[error("unknown label `{0}` (expected one of introduction, related_work, method, eval_result, conclusion, other)")]
    UnknownLabel(String),
    #[error("unlabeled chapters in articles: {}", .0.join(", "))]
    Unlabeled(Vec<String>),
    #[error("articles without a year: {}", .0.join(", "))]
    MissingYear(Vec<String>),
    #[error("kappa is undefined: chance agreement is 1 but observed agreement is {observed}")]
    UndefinedKappa { observed: f64 },
    #[error("annotation sequences are empty or of unequal length ({0} vs {1})")]
    AnnotationLength(usize, usize),
    #[error("term `{0}` is not in the vocabulary")]
    UnknownTerm(String),
    #[error("article `{0}` has no chapter outside the `other` class")]
    DegenerateArticle(String),
    #[error("class `{0}` does not occur in the corpus")]
    AbsentClass(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("training failed: {0}")]
    Training(String),
    #[error("evaluation data overlaps the training data: {}", .0.join(", "))]
    Leakage(Vec<String>),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("artifact error: {0}")]
    Artifact(String),
    #[error("{0}")]
    InvalidInput(String),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) => ErrorKind::Config,
            Error::Invariant(_) => ErrorKind::Invariant,
            _ => ErrorKind::Data,
        }
    }
}
