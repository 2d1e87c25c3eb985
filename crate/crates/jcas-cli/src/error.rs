use std::fmt;

/// CLI failure classes, mapped to process exit codes: usage/config errors
/// exit with 2, runtime/numeric errors with 3.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) | CliError::Runtime(msg) => write!(f, "{msg}"),
        }
    }
}

impl From<jcas_core::Error> for CliError {
    fn from(e: jcas_core::Error) -> Self {
        use jcas_core::Error::*;
        match e {
            Validation(_) | Parameter(_) => CliError::Usage(e.to_string()),
            EmptyChannel(_) | Undefined(_) | Fit(_) => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(format!("i/o error: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;
