use nls_core::NlsError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("validation error: {0}")]
    Validation(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("verification failed: {0}")]
    Verification(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Solver(_) => 2,
            CliError::Verification(_) => 3,
        }
    }
}

/// Core errors raised while checking a config are validation errors; the
/// compute stages remap them with [`solver`].
impl From<NlsError> for CliError {
    fn from(e: NlsError) -> Self {
        CliError::Validation(e.to_string())
    }
}

pub fn solver(e: NlsError) -> CliError {
    CliError::Solver(e.to_string())
}

pub fn io(e: std::io::Error) -> CliError {
    CliError::Solver(format!("i/o: {e}"))
}
