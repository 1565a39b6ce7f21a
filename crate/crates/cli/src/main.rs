// SPDX-License-Identifier: MIT OR Apache-2.0

#![forbid(unsafe_code)]

mod args;
mod artifacts;
mod commands;
mod failure;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(3),
            };
        }
    };
    let result = match cli.command {
        Command::Detect(a) => commands::detect(&a),
        Command::Influence(a) => commands::influence(&a),
        Command::Simulate(a) => commands::simulate(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("cpflux: {f}");
            f.exit_code()
        }
    }
}
