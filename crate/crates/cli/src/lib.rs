//! File-based front end for `sieve-lab-core`: simulation, tuning, fitting,
//! confidence regions, tests and Monte Carlo studies.
//!
//! Every output carries a manifest (tool version, schema version, the
//! command line and the resolved settings). Exit statuses are 0 on success,
//! 1 for configuration errors, 2 for data errors and 3 for numerical failure.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod m0;
pub mod manifest;
pub mod reproduce;

use clap::error::ErrorKind as ClapErrorKind;
use clap::Parser;

pub use commands::{Cli, Command};
pub use error::{CliError, CliResult};

/// Environment fallback for `--threads`.
pub const THREADS_ENV: &str = "SIEVE_LAB_THREADS";

fn thread_count(flag: Option<usize>) -> Result<Option<usize>, CliError> {
    if let Some(n) = flag {
        return Ok(Some(n));
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| CliError::config(format!("{THREADS_ENV} must be a number, got '{v}'"))),
        _ => Ok(None),
    }
}

/// Parses `argv` (program name first), runs the command and returns the exit
/// status. Errors are reported on standard error.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let argv: Vec<String> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ClapErrorKind::DisplayHelp | ClapErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    let outcome = thread_count(cli.threads).and_then(|threads| {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = threads {
            builder = builder.num_threads(n);
        }
        let pool = builder
            .build()
            .map_err(|e| CliError::config(format!("cannot start worker pool: {e}")))?;
        pool.install(|| commands::execute(&cli.command, &argv[1.min(argv.len())..]))
    });
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
