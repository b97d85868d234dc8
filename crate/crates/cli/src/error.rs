use dirac_core::Error;
use thiserror::Error as ThisError;

#[derive(Debug, ThisError)]
pub enum CliError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error(transparent)]
    Core(#[from] Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 2 for anything caught before or outside the numerics, 3 for divergence.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(Error::Divergence { .. }) => 3,
            _ => 2,
        }
    }
}
