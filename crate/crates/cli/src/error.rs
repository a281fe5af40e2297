// SPDX-License-Identifier: MIT OR Apache-2.0

use cpfilter_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Process exit status: 2 config, 3 data, 4 numerical.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) | CliError::Io { .. } => 3,
            CliError::Numerical(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Data(_) | CliError::Io { .. } => "data",
            CliError::Numerical(_) => "numerical",
        }
    }

    /// Classifies a core error raised while processing loaded data.
    pub fn from_core_data(err: CoreError) -> Self {
        match err {
            CoreError::InvalidArgument(msg) => CliError::Data(msg),
            other => CliError::Numerical(other.to_string()),
        }
    }

    /// Classifies a core error raised while building models from config.
    pub fn from_core_config(err: CoreError) -> Self {
        match err {
            CoreError::InvalidArgument(msg) => CliError::Config(msg),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
