//! `igt`: batch pipelines over interlinear glossed text corpora.
//!
//! Exit status: 0 on success, 1 on operational errors (including missing
//! files), 2 when outputs were written but part of the input was skipped or
//! failed, 64 on usage errors.

mod args;
mod commands;
mod config;
mod manifest;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{CommandFactory, Parser};

use args::Cli;
use commands::{EXIT_PARTIAL, EXIT_USAGE};

fn main() -> ExitCode {
    let subcommands: Vec<String> = Cli::command().get_subcommands().map(|c| c.get_name().to_string()).collect();
    let argv = match config::inject(std::env::args_os().collect(), &subcommands) {
        Ok(argv) => argv,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    env_logger::Builder::new().parse_filters(&cli.log_level).format_timestamp(None).init();
    match commands::run(&cli.command) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(reason)) => {
            eprintln!("warning: {reason}");
            ExitCode::from(EXIT_PARTIAL)
        }
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}
