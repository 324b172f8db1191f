use std::fmt;
use std::path::PathBuf;

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

/// Pipeline stage, used to tag failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    Load,
    Rank,
    Select,
    Embed,
    Fit,
    Score,
    Report,
    Perturb,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Config => "config",
            Stage::Load => "load",
            Stage::Rank => "rank",
            Stage::Select => "select",
            Stage::Embed => "embed",
            Stage::Fit => "fit",
            Stage::Score => "score",
            Stage::Report => "report",
            Stage::Perturb => "perturb",
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    /// Bad configuration or inputs that fail validation.
    #[error("[{stage}] {message}")]
    Invalid { stage: Stage, message: String },

    /// A pipeline stage failed on otherwise valid inputs.
    #[error("[{stage}] {message}")]
    Stage { stage: Stage, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl HarnessError {
    pub fn invalid(stage: Stage, message: impl fmt::Display) -> Self {
        HarnessError::Invalid {
            stage,
            message: message.to_string(),
        }
    }

    pub fn stage(stage: Stage, message: impl fmt::Display) -> Self {
        HarnessError::Stage {
            stage,
            message: message.to_string(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 2 for validation problems, 3 for stage failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Invalid { .. } => 2,
            HarnessError::Stage { .. } | HarnessError::Io { .. } => 3,
        }
    }
}

/// Tags a library error with the stage it came from.
pub(crate) trait StageContext<T> {
    fn at(self, stage: Stage) -> Result<T>;
    fn invalid_at(self, stage: Stage) -> Result<T>;
}

impl<T, E: fmt::Display> StageContext<T> for std::result::Result<T, E> {
    fn at(self, stage: Stage) -> Result<T> {
        self.map_err(|e| HarnessError::stage(stage, e))
    }

    fn invalid_at(self, stage: Stage) -> Result<T> {
        self.map_err(|e| HarnessError::invalid(stage, e))
    }
}
