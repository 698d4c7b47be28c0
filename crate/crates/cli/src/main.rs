mod args;
mod commands;
mod manifest;

use std::process::ExitCode;

use clap::Parser;
use rdlimit::ErrorKind;

use crate::args::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rdlimit: {e}");
            ExitCode::from(match e.kind() {
                ErrorKind::Usage => 2,
                ErrorKind::Input => 3,
                ErrorKind::Numerical => 4,
            })
        }
    }
}
