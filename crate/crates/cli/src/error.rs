use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Unusable input: bad flags, malformed documents, unwritable paths.
    #[error("{0}")]
    Input(String),
    /// The request is well formed but no design can satisfy it.
    #[error("{0}")]
    Infeasible(String),
    /// A search ran out of room before reaching its target.
    #[error("{0}")]
    Exhausted(String),
    #[error(transparent)]
    Core(#[from] epsopt_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) | CliError::Io(_) => 2,
            CliError::Core(epsopt_core::Error::Structure(_) | epsopt_core::Error::Domain(_)) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Exhausted(_) => 4,
            CliError::Core(epsopt_core::Error::Internal(_)) => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
