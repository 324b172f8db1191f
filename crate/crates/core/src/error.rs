use std::path::PathBuf;

use crate::Label;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("bad magic {0:?}")]
    BadMagic([u8; 4]),

    #[error("version mismatch: file has version {found}, reader supports {supported}")]
    VersionMismatch { found: u16, supported: u16 },

    #[error("truncated payload: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: usize, found: usize },

    #[error("truncated header: {0}")]
    TruncatedHeader(String),

    #[error("layout inconsistency: {0}")]
    LayoutInconsistency(String),

    #[error("malformed header: {0}")]
    MalformedHeader(String),

    #[error("non-finite value at ({token},{dim})")]
    NonFinite { token: usize, dim: usize },

    #[error("manifest line {line}: {message}")]
    Manifest { line: usize, message: String },

    #[error("duplicate sample id {0:?}")]
    DuplicateId(String),

    #[error("unknown label token {0:?}")]
    UnknownLabel(String),

    #[error("generator partition overlap: {0:?} is both seen and unseen")]
    PartitionOverlap(String),

    #[error("generator {0:?} is in neither the seen nor the unseen set")]
    UnpartitionedGenerator(String),

    #[error("token index {index} out of range for {n_tokens} tokens")]
    TokenIndexOutOfRange { index: usize, n_tokens: usize },

    #[error("layout mismatch: expected {expected}, found {found}")]
    LayoutMismatch { expected: String, found: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("class {class} has {count} samples, need at least {required}")]
    InsufficientSamples {
        class: Label,
        count: usize,
        required: usize,
    },

    #[error("K={k} out of range, {available} tokens are scored")]
    KOutOfRange { k: usize, available: usize },

    #[error("empty token selection")]
    EmptySelection,

    #[error("zero-norm embedding, cosine similarity undefined")]
    ZeroNorm,

    #[error("non-finite score for token {token}")]
    NonFiniteScore { token: usize },

    #[error("empty input")]
    EmptyInput,

    #[error("input holds a single class ({0}); both real and fake are required")]
    SingleClass(Label),

    #[error("unknown {kind} {name:?} (known: {known})")]
    UnknownName {
        kind: &'static str,
        name: String,
        known: String,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("artifact error: {0}")]
    Artifact(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
