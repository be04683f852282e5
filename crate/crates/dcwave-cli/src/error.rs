//! Failure classes of the command line and their exit codes.

use std::fmt;

/// A failed command. The variant decides the process exit code:
///
/// | code | meaning                                   |
/// |------|-------------------------------------------|
/// | 0    | success                                   |
/// | 2    | usage or parameter validation error       |
/// | 3    | a numerical method missed its accuracy    |
/// | 4    | a verification or divergence check failed |
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Accuracy(String),
    Verification(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Accuracy(_) => 3,
            CliError::Verification(_) => 4,
        }
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Accuracy(m) => write!(f, "accuracy failure: {m}"),
            CliError::Verification(m) => write!(f, "verification failure: {m}"),
        }
    }
}

impl From<dcwave::Error> for CliError {
    fn from(e: dcwave::Error) -> Self {
        use dcwave::Error as E;
        match e {
            E::Domain(_) | E::Range(_) => CliError::Usage(e.to_string()),
            E::Accuracy { .. } => CliError::Accuracy(e.to_string()),
            E::Verification(_) | E::Divergence(_) => CliError::Verification(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(format!("i/o: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Usage(format!("csv: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Usage(format!("json: {e}"))
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
