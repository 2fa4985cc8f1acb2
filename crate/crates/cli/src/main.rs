mod args;
mod commands;
mod failure;
mod manifest;
mod table;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use failure::{ExitCode as _, Outcome};

fn dispatch(cli: &Cli) -> Outcome {
    if let Some(n) = cli.global.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .usage()?;
    }
    let g = &cli.global;
    match &cli.command {
        Command::Synth(a) => commands::synth::run(g, a),
        Command::Analyze(a) => commands::analyze::run(g, a),
        Command::Learn(a) => commands::learn::run(g, a),
        Command::Report(a) => commands::report::run(g, a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CQA_LOG", "warn")).init();
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code)
        }
    }
}
