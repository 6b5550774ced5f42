use thiserror::Error;

/// Command failure, classified by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error(transparent)]
    Internal(#[from] anyhow::Error),
}

impl CliError {
    pub const USAGE: u8 = 2;
    pub const INFEASIBLE: u8 = 3;
    pub const INTERNAL: u8 = 4;

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => Self::USAGE,
            CliError::Infeasible(_) => Self::INFEASIBLE,
            CliError::Internal(_) => Self::INTERNAL,
        }
    }
}

impl From<sigiscc::Error> for CliError {
    fn from(e: sigiscc::Error) -> Self {
        match e {
            sigiscc::Error::Infeasible { .. } => CliError::Infeasible(e.to_string()),
            sigiscc::Error::InvalidParameter { .. }
            | sigiscc::Error::DegenerateThreshold { .. }
            | sigiscc::Error::ZeroDistance { .. }
            | sigiscc::Error::NoChannel
            | sigiscc::Error::ZeroChannel { .. } => CliError::Usage(e.to_string()),
            other => CliError::Internal(other.into()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Internal(e.into())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Internal(e.into())
    }
}
