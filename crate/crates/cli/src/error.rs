use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Exit code 2.
    #[error("invalid input: {0}")]
    Invalid(String),
    /// Exit code 1.
    #[error("verification failed: {0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Failed(_) => 1,
        }
    }
}

impl From<persuasion_core::Error> for CliError {
    fn from(e: persuasion_core::Error) -> Self {
        use persuasion_core::Error as E;
        match e {
            E::Incompatible(_) | E::RootSearch(_) => CliError::Failed(e.to_string()),
            _ => CliError::Invalid(e.to_string()),
        }
    }
}
