use std::path::PathBuf;

pub type Result<T, E = PerturbError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum PerturbError {
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("{what}: {size} is not divisible by {by}")]
    NonDivisible {
        what: &'static str,
        size: usize,
        by: usize,
    },

    #[error("image size mismatch: {0}")]
    SizeMismatch(String),

    #[error("codec failure: {0}")]
    Codec(String),

    #[error("unknown perturbation {name:?} (known: {known})")]
    UnknownKind { name: String, known: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
