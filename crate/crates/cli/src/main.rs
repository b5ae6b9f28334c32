use std::process::ExitCode;

use clap::Parser;

mod commands;
mod config;

use config::{Cli, Command};

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = commands::configure_threads() {
        eprintln!("error: {}", e.msg);
        return ExitCode::from(e.code);
    }
    let outcome = match cli.command {
        Command::Fit(a) => commands::fit(a),
        Command::Tune(a) => commands::tune(a),
        Command::Oracle(a) => commands::oracle(a),
        Command::Infer(a) => commands::infer(a),
        Command::Simulate(a) => commands::simulate(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.msg);
            ExitCode::from(e.code)
        }
    }
}
