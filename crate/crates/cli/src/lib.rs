//! The `cdi` command-line tool: corpus and plan files, run configuration,
//! and one subcommand per workflow step (annotate, plan, estimate) plus the
//! simulation and calibration reports.
//!
//! Every command returns the text it prints; diagnostics go to stderr.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod format;
pub mod io;

pub use cli::{Cli, Command};
pub use error::{CliError, CliResult};

/// Process entry point. Usage errors exit 1; help and version exit 0.
pub fn main() -> std::process::ExitCode {
    use clap::Parser;
    use std::process::ExitCode;

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

pub fn run(cli: &Cli) -> CliResult<String> {
    match &cli.command {
        Command::Plan(a) => commands::plan::run(a),
        Command::Estimate(a) => commands::estimate::run(a),
        Command::Simulate(a) => commands::simulate::run(a),
        Command::Calibrate(a) => commands::calibrate::run(a),
        Command::Synth(a) => commands::synth::run(a),
        Command::Annotate(a) => commands::annotate::run(a),
    }
}
