use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] ecdwit_core::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 2 for bad input, 3 when truncation makes a result unreliable.
    pub fn exit_code(&self) -> i32 {
        use ecdwit_core::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Core(E::Truncation(_)) => 3,
            CliError::Core(_) => 2,
            CliError::Io(_) => 1,
        }
    }
}
