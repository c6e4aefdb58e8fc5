//! `binclust`: fit, summarize and study sparse Bernoulli mixtures from the
//! command line.

mod args;
mod commands;
mod config_file;

use std::process::ExitCode;

use clap::Parser;

use args::Cli;

/// Exit statuses.
const EXIT_USAGE: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_NUMERICAL: u8 = 4;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();

    let argv = match config_file::expand_args(std::env::args_os().collect()) {
        Ok(argv) => argv,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    if let Some(threads) = cli.global.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: cannot configure {threads} worker threads: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    }
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical_error() {
                EXIT_NUMERICAL
            } else if e.is_data_error() {
                EXIT_DATA
            } else {
                EXIT_USAGE
            })
        }
    }
}
