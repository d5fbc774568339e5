use pdgc::PdgcError;
use thiserror::Error;

/// Failure categories, each with its own process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
    #[error("numeric error: {0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }
}

impl From<PdgcError> for CliError {
    fn from(e: PdgcError) -> Self {
        let msg = e.to_string();
        match e {
            PdgcError::Io { .. } | PdgcError::Parse { .. } | PdgcError::Validation(_) => CliError::Io(msg),
            PdgcError::Argument(_) => CliError::Config(msg),
            PdgcError::Estimation(_) | PdgcError::Numerical(_) => CliError::Numeric(msg),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
