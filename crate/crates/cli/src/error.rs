use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] blframe::Error),

    #[error("{0}")]
    Usage(String),

    #[error("invalid config: {0}")]
    Config(#[from] serde_json::Error),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    /// 2 for parameter and usage problems, 1 for numerical failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Core(blframe::Error::OutOfRange { .. } | blframe::Error::InvalidParameter(_))
            | Self::Usage(_)
            | Self::Config(_) => 2,
            _ => 1,
        }
    }
}
