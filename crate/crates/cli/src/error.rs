use std::fmt;

use consensus_core::Error;

/// Process exit codes. These are part of the command-line contract; I/O
/// failures share code 1 with malformed input.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exit {
    Success = 0,
    Parse = 1,
    NotH1 = 2,
    Divergence = 3,
    Numerical = 4,
    Verification = 5,
}

#[derive(Debug)]
pub struct CliError {
    pub exit: Exit,
    pub message: String,
}

impl CliError {
    pub fn new(exit: Exit, message: impl Into<String>) -> Self {
        Self {
            exit,
            message: message.into(),
        }
    }

    pub fn parse(message: impl Into<String>) -> Self {
        Self::new(Exit::Parse, message)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let exit = match e {
            Error::Dimension(_) | Error::Argument(_) => Exit::Parse,
            Error::Ambiguity(_) => Exit::NotH1,
            Error::Numerical(_) | Error::Blowup { .. } | Error::Range { .. } => Exit::Numerical,
        };
        Self::new(exit, e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::new(Exit::Parse, format!("i/o error: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;
