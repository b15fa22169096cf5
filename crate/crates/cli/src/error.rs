use thiserror::Error;

/// Failures mapped onto process exit codes.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("{0}")]
    Cap(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Unsupported(_) => 3,
            CliError::Cap(_) => 4,
        }
    }

    /// Prefixes the message with where it happened.
    pub fn context(self, at: &str) -> Self {
        match self {
            CliError::Data(m) => CliError::Data(format!("{at}: {m}")),
            CliError::Unsupported(m) => CliError::Unsupported(format!("{at}: {m}")),
            other => other,
        }
    }
}

impl From<stacktab::Error> for CliError {
    fn from(e: stacktab::Error) -> Self {
        use stacktab::Error as E;
        match e {
            E::Unsupported(m) => CliError::Unsupported(m),
            E::NotNested(_) => CliError::Unsupported(e.to_string()),
            E::CapExceeded { .. } => CliError::Cap(format!("cap exceeded: {e}")),
            other => CliError::Data(other.to_string()),
        }
    }
}
