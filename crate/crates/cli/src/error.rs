use thiserror::Error;

/// Failure of a CLI run, classified by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed or inconsistent configuration, including bad input files.
    #[error("config error: {0}")]
    Config(String),
    /// The models rejected the request or failed while computing.
    #[error("{0}")]
    Domain(#[from] dqd_core::Error),
    /// Writing outputs failed.
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Domain(_) | CliError::Io(_) => 1,
        }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }
}

/// Reclassifies a model error raised while checking inputs as a configuration error.
pub(crate) fn as_config(e: dqd_core::Error) -> CliError {
    CliError::Config(e.to_string())
}
