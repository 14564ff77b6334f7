//! Command failures and their exit codes.

use std::fmt;
use std::process::ExitCode;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    /// The proof was checked and rejected.
    Rejected,
    Usage,
    Data,
}

#[derive(Debug)]
pub struct Failure {
    pub kind: Kind,
    pub message: String,
}

impl Failure {
    pub fn rejected(message: impl Into<String>) -> Self {
        Failure { kind: Kind::Rejected, message: message.into() }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Failure { kind: Kind::Usage, message: message.into() }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Failure { kind: Kind::Data, message: message.into() }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self.kind {
            Kind::Rejected => 1,
            Kind::Usage => 2,
            Kind::Data => 3,
        })
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<v3db::Error> for Failure {
    fn from(e: v3db::Error) -> Self {
        match e {
            v3db::Error::Rejected(_) | v3db::Error::FingerprintMismatch => Failure::rejected(e.to_string()),
            v3db::Error::InvalidConfig(_)
            | v3db::Error::NotPowerOfTwo { .. }
            | v3db::Error::InfeasibleBudgets(_)
            | v3db::Error::NonIntegralDerivedParam { .. } => Failure::usage(e.to_string()),
            _ => Failure::data(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::data(e.to_string())
    }
}
