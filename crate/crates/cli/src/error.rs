use std::fmt;

/// Failure classes of a scenario run, each with its own process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Malformed config, unknown key, value out of range, unparsable expression.
    Schema(String),
    /// A numerical precondition of the library was violated.
    Numerical(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Schema(m) => write!(f, "invalid configuration: {m}"),
            CliError::Numerical(m) => write!(f, "numerical precondition failed: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<psq_core::Error> for CliError {
    fn from(e: psq_core::Error) -> Self {
        use psq_core::Error as E;
        match e {
            E::Parse(_) => CliError::Schema(e.to_string()),
            E::Io(_) | E::Format(_) => CliError::Io(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
