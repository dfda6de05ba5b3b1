use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),
    #[error("run aborted: {0}")]
    Aborted(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    /// 2 for configuration problems, 1 for everything that happens after a
    /// valid configuration was accepted.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::UnknownParameter(_) => 2,
            Self::Aborted(_) | Self::Io(_) | Self::Csv(_) => 1,
        }
    }
}
