//! Verification suites and command-line plumbing for `infogeo`.
//!
//! The binary is a thin wrapper: [`suites::run_suite`] produces JSON reports,
//! [`compute::compute`] evaluates single quantities and [`ball::ball`] samples
//! geodesic balls as CSV.

pub mod ball;
pub mod compute;
pub mod config;
pub mod registry;
pub mod report;
pub mod suites;

use infogeo_core::GeomError;
use serde_json::json;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Geometry(#[from] GeomError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Geometry(_) | CliError::Io(_) => EXIT_FAILURE,
        }
    }

    /// Structured error document for stdout.
    pub fn to_json(&self) -> String {
        let kind = match self {
            CliError::Usage(_) => "UsageError",
            CliError::Geometry(e) => e.kind(),
            CliError::Io(_) => "IoError",
        };
        let doc = json!({ "schema": report::SCHEMA, "error": { "kind": kind, "message": self.to_string() } });
        serde_json::to_string_pretty(&doc).expect("error documents are plain JSON")
    }
}
