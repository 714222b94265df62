use std::fmt;

use pilattice::Error;

/// Failure of a CLI run, mapped onto the documented exit codes.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Core(Error),
    Io(std::io::Error),
    /// Statistical or structural checks that failed during the run.
    Violations(Vec<String>),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) if e.is_cap() => 3,
            CliError::Core(e) if e.is_invariant() => 4,
            CliError::Core(_) => 2,
            CliError::Io(_) => 1,
            CliError::Violations(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::Core(e) if e.is_cap() => write!(f, "cap exceeded: {e}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
            CliError::Violations(v) => {
                write!(f, "{} invariant violation(s):", v.len())?;
                for line in v {
                    write!(f, "\n  {line}")?;
                }
                Ok(())
            }
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Config("x".into()).exit_code(), 2);
        assert_eq!(
            CliError::Core(Error::CapExceeded {
                what: "x",
                value: 2,
                cap: 1
            })
            .exit_code(),
            3
        );
        assert_eq!(CliError::Core(Error::Invariant("x".into())).exit_code(), 4);
        assert_eq!(CliError::Core(Error::InvalidCode("x".into())).exit_code(), 2);
        assert_eq!(CliError::Violations(vec![]).exit_code(), 4);
    }
}
