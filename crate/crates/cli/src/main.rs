//! `polardyn` command-line front end. Each subcommand is one pipeline stage
//! reading and writing the bundle's file formats; `report` runs them all.

use std::process::ExitCode;

use clap::Parser;

mod args;
mod commands;

use args::{Cli, Command};

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(cli.verbose);
    let strict = cli.strict;
    let result = match &cli.command {
        Command::Ingest(a) => commands::ingest(a),
        Command::Filter(a) => commands::filter(a),
        Command::Lexicon(a) => commands::lexicon(a),
        Command::Train(a) => commands::train(a),
        Command::Classify(a) => commands::classify(a),
        Command::Network(a) => commands::network(a, strict),
        Command::Communities(a) => commands::communities(a, strict),
        Command::Switches(a) => commands::switches(a),
        Command::Softlabels(a) => commands::softlabels(a),
        Command::Correlate(a) => commands::correlate(a),
        Command::Synth(a) => commands::synth(a),
        Command::Report(a) => {
            return match commands::report(a, strict) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            };
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &polardyn::Error) -> u8 {
    match e {
        polardyn::Error::Config(_) => 2,
        polardyn::Error::NonConvergence(_) => 4,
        _ => 3,
    }
}
