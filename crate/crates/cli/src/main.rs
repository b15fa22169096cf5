//! `stacktab`: Markov bases, fits and exact tests for stacked square tables.
//!
//! Exit codes: 0 ok, 1 usage, 2 data error, 3 unsupported model, 4 fiber
//! enumeration cap exceeded.

mod args;
mod commands;
mod error;

use std::io::Write;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use crate::args::{Cli, Command};
use crate::error::CliError;

fn run(cli: &Cli) -> Result<commands::Output, CliError> {
    match &cli.command {
        Command::Basis(a) => commands::basis(a),
        Command::Matrix(a) => commands::matrix(a),
        Command::Fit(a) => commands::fit_cmd(a),
        Command::Test(a) => commands::test_cmd(a),
        Command::Enumerate(a) => commands::enumerate_cmd(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(&cli) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(out.text.as_bytes()).is_err() {
                return ExitCode::from(2);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
