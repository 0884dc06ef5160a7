use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("duplicate document id {0:?}")]
    DuplicateDocId(String),

    #[error("duplicate sequence id {0:?}")]
    DuplicateSeqId(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("invalid corpus spec: {0}")]
    InvalidSpec(String),

    #[error("empty corpus: {0}")]
    EmptyCorpus(String),

    #[error("cannot score an empty sequence")]
    EmptySequence,

    #[error("model vocabulary mismatch: conditional has V={cond}, marginal has V={marg}")]
    VocabMismatch { cond: u32, marg: u32 },

    #[error("requested subset of {requested} exceeds corpus size {available}")]
    PoolExceedsCorpus { requested: usize, available: usize },

    #[error("budget {n} exceeds available pool of {pool} records")]
    BudgetExceedsPool { n: usize, pool: usize },

    #[error("corpus exhausted after selecting {selected} of {n} sequences")]
    CorpusExhausted { selected: usize, n: usize },

    #[error("no cost formula for method {0:?}")]
    UnknownMethod(String),

    #[error("{path}: unsupported format version {found:?}")]
    FormatVersion { path: PathBuf, found: String },

    #[error("{path}: config hash {found} does not match expected {expected}")]
    ConfigHashMismatch {
        path: PathBuf,
        expected: String,
        found: String,
    },

    #[error("label missing for sequence {0:?}")]
    MissingLabel(String),

    #[error("stage {stage} failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("thread pool: {0}")]
    ThreadPool(String),

    #[error("config: {0}")]
    Config(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }

    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
