use std::fmt;
use std::io;

use thiserror::Error;

/// Pipeline stage, used to tag failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Mesh,
    Forward,
    Noise,
    Partition,
    Sensitivity,
    Bounds,
    Solve,
    Output,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Mesh => "mesh",
            Stage::Forward => "forward",
            Stage::Noise => "noise",
            Stage::Partition => "partition",
            Stage::Sensitivity => "sensitivity",
            Stage::Bounds => "bounds",
            Stage::Solve => "solve",
            Stage::Output => "output",
        })
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{stage} stage failed: {source}")]
    Numerical {
        stage: Stage,
        #[source]
        source: eit_core::Error,
    },
    #[error("i/o error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
}

impl CliError {
    /// Process exit code: 2 for configuration, 3 for numerical failures,
    /// 1 for anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical { .. } => 3,
            CliError::Io { .. } => 1,
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: io::Error) -> Self {
        CliError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

/// Tags core errors with the stage they came from; configuration errors
/// raised by core keep their configuration meaning.
pub trait StageExt<T> {
    fn stage(self, stage: Stage) -> Result<T, CliError>;
}

impl<T> StageExt<T> for eit_core::Result<T> {
    fn stage(self, stage: Stage) -> Result<T, CliError> {
        self.map_err(|source| match source {
            eit_core::Error::Config(msg) => CliError::Config(format!("{stage}: {msg}")),
            source => CliError::Numerical { stage, source },
        })
    }
}
