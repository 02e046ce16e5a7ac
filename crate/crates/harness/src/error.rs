//! Harness errors, split by exit code: configuration problems exit 1,
//! runtime failures exit 2.

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum HarnessError {
    /// Invalid configuration; one message per violation.
    Config(Vec<String>),
    /// Simulation or I/O failure after a valid configuration.
    Runtime(String),
}

impl HarnessError {
    pub fn runtime(msg: impl Into<String>) -> Self {
        HarnessError::Runtime(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 1,
            HarnessError::Runtime(_) => 2,
        }
    }
}

impl fmt::Display for HarnessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HarnessError::Config(errs) => {
                writeln!(f, "invalid configuration:")?;
                for e in errs {
                    writeln!(f, "  - {e}")?;
                }
                Ok(())
            }
            HarnessError::Runtime(msg) => write!(f, "runtime error: {msg}"),
        }
    }
}

impl std::error::Error for HarnessError {}

impl From<ppc_core::Error> for HarnessError {
    fn from(e: ppc_core::Error) -> Self {
        HarnessError::Runtime(e.to_string())
    }
}
