//! Command-line front end for the `ppos-core` interim analysis library.
//!
//! Three subcommands share one set of model and rule flags:
//!
//! * `analyze` evaluates the selected rules on the day-prefix of every
//!   experiment in a stream file;
//! * `simulate` runs a synthetic corpus and writes confusion matrices,
//!   operating characteristics and histogram data;
//! * `check` runs the predictive check of a fitted model against observed
//!   streams.
//!
//! Each invocation appends a [`record::RunRecord`] to a JSON-lines log.

pub mod args;
pub mod commands;
pub mod error;
pub mod input;
pub mod output;
pub mod record;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;

use crate::args::{Cli, Command};
pub use crate::error::{CliError, CliResult};

/// Runs the command line in `argv` and returns the stdout body.
pub fn execute(cli: &Cli, argv: &[String]) -> CliResult<Vec<u8>> {
    match &cli.command {
        Command::Analyze(a) => commands::analyze(a, argv),
        Command::Simulate(a) => commands::simulate(a, argv),
        Command::Check(a) => commands::check(a, argv),
    }
}

/// Parses `argv`, runs it and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let argv: Vec<String> = argv
        .iter()
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    match execute(&cli, &argv) {
        Ok(body) => {
            let mut out = std::io::stdout().lock();
            if let Err(e) = out.write_all(&body).and_then(|_| out.flush()) {
                eprintln!("error: writing output: {e}");
                return 3;
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
