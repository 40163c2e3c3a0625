mod cli;
mod commands;
mod manifest;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use cli::{Cli, Command};

/// Exit status for malformed invocations; clap's default of 2 would clash
/// with the reachability failure code.
const USAGE: u8 = 64;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(USAGE),
            };
        }
    };

    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(USAGE);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }

    let jobs = cli.jobs;
    let result = match &cli.command {
        Command::Generate(a) => commands::generate_cmd(a, jobs),
        Command::Detect(a) => commands::detect_cmd(a, jobs),
        Command::Verify(a) => commands::verify_cmd(a),
        Command::Sweep(a) => commands::sweep_cmd(a, jobs),
        Command::Histogram(a) => commands::histogram_cmd(a, jobs),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
