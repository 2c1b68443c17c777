//! Command-line front end: argument parsing, run configs, reports and the
//! acceptance self-test.
//!
//! Exit codes: 0 success, 1 a check reported failures, 2 bad input,
//! 3 degenerate tetrahedron, 4 numerical failure.

pub mod args;
pub mod commands;
pub mod config;
pub mod output;
pub mod selftest;

use std::fmt;

pub use commands::{execute, Rendered};
pub use config::RunConfig;
pub use output::Report;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_NUMERICAL,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<anisotetra::Error> for CliError {
    fn from(e: anisotetra::Error) -> Self {
        use anisotetra::Error as E;
        let code = match e {
            E::DegenerateTetrahedron { .. } => EXIT_DEGENERATE,
            E::IllConditionedBasis { .. } | E::GenerationFailure(_) => EXIT_NUMERICAL,
            _ => EXIT_INPUT,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

/// Parses `argv`, runs the command and writes its outputs. Returns the
/// process exit code; diagnostics go to standard error.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    use clap::Parser;
    let cli = match args::Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let result = cli
        .into_config()
        .and_then(execute)
        .and_then(|r| commands::emit(&r).map(|_| r.exit));
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}
