//! Structured errors and their exit codes.

use serde::Serialize;
use thiserror::Error;

/// Exit code for domain failures: bad models, failed fits, unsatisfiable queries.
pub const EXIT_DOMAIN: i32 = 1;
/// Exit code for usage failures: bad flags, missing files, refused overwrites.
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Usage,
    Domain,
}

/// An error as reported on stderr: `{"error": {"code", "message", "location"}}`.
#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[error("{code}: {message}")]
pub struct CliError {
    #[serde(skip)]
    pub kind: Kind,
    pub code: &'static str,
    pub message: String,
    /// File, file and line, or flag the error refers to.
    pub location: Option<String>,
    /// Usage text for usage errors raised by the argument parser.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub help: Option<String>,
}

impl CliError {
    pub fn usage(code: &'static str, message: impl Into<String>) -> Self {
        CliError { kind: Kind::Usage, code, message: message.into(), location: None, help: None }
    }

    pub fn domain(code: &'static str, message: impl ToString) -> Self {
        CliError { kind: Kind::Domain, code, message: message.to_string(), location: None, help: None }
    }

    pub fn at(mut self, location: impl Into<String>) -> Self {
        self.location = Some(location.into());
        self
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            Kind::Usage => EXIT_USAGE,
            Kind::Domain => EXIT_DOMAIN,
        }
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Wrapper<'a> {
            error: &'a CliError,
        }
        serde_json::to_string_pretty(&Wrapper { error: self }).expect("plain data serializes")
    }
}

pub type CliResult<T> = Result<T, CliError>;
