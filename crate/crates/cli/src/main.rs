#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Complete(a) => commands::complete(a),
        Command::Defend(a) => commands::defend(a),
        Command::Compare(a) => commands::compare(a),
        Command::RankSweep(a) => commands::rank_sweep_cmd(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
