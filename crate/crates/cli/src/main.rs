//! `medgraph`: graph checks, separation queries, exact discrete models, survival effect
//! estimation and Hawkes identification from the command line.
//!
//! Results are JSON envelopes on stdout (or `--output`); curves and events are CSV files
//! in `--out`. Errors are JSON on stderr. Exit codes: 0 success, 1 domain error, 2 usage error.

mod commands;
mod error;
mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{CliError, CliResult, EXIT_USAGE};
use crate::output::Sink;

#[derive(Debug, Parser)]
#[command(name = "medgraph", version, about = "Time-dependent mediation analysis with graphs, exact models and survival data")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// Master seed for every random draw; recorded in all outputs.
    #[arg(long, global = true, env = "MEDGRAPH_SEED")]
    pub seed: Option<u64>,
    /// Replace existing output files.
    #[arg(long, global = true)]
    pub force: bool,
    /// Write the main result to this file instead of stdout.
    #[arg(short, long, global = true, value_name = "FILE")]
    pub output: Option<PathBuf>,
    /// Result format, where a command offers more than one.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// More log output on stderr; repeat for more.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    /// Only log errors.
    #[arg(short, long, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    /// The graph text format, for `unroll`.
    Lig,
    /// Plain-text table, for `selftest`.
    Table,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the mediation assumptions of a graph with `role` statements.
    Check(commands::graph::CheckArgs),
    /// Test d-, δ- or extended δ-separation.
    Sep(commands::graph::SepArgs),
    /// Unroll a rolled graph on a number of lags.
    Unroll(commands::graph::UnrollArgs),
    /// Evaluate the g-formula and related quantities on an exact discrete model.
    Simulate(commands::scm::SimulateArgs),
    /// Estimate direct and indirect survival effects from counting-process data.
    Estimate(commands::estimate::EstimateArgs),
    /// Simulate a Hawkes model and identify its mediation effects.
    Hawkes(commands::hawkes::HawkesArgs),
    /// Run the seeded property suites and print a pass/fail table.
    Selftest(commands::selftest::SelftestArgs),
}

impl Global {
    pub fn sink(&self) -> Sink {
        Sink { path: self.output.clone(), force: self.force }
    }

    /// The chosen format if it is one of `allowed`, else the first of them.
    pub fn format(&self, allowed: &[Format]) -> CliResult<Format> {
        match self.format {
            None => Ok(allowed[0]),
            Some(f) if allowed.contains(&f) => Ok(f),
            Some(f) => {
                Err(CliError::usage("format", format!("format `{f:?}` is not available here").to_lowercase()).at("--format"))
            }
        }
    }
}

fn run(cli: Cli) -> CliResult<i32> {
    let g = &cli.global;
    match &cli.command {
        Command::Check(a) => commands::graph::check(a, g),
        Command::Sep(a) => commands::graph::sep(a, g),
        Command::Unroll(a) => commands::graph::unroll(a, g),
        Command::Simulate(a) => commands::scm::simulate(a, g),
        Command::Estimate(a) => commands::estimate::estimate(a, g),
        Command::Hawkes(a) => commands::hawkes::hawkes(a, g),
        Command::Selftest(a) => commands::selftest::selftest(a, g),
    }
}

fn init_logging(g: &Global) {
    let level = match (g.quiet, g.verbose) {
        (true, _) => log::LevelFilter::Error,
        (false, 0) => log::LevelFilter::Warn,
        (false, 1) => log::LevelFilter::Info,
        (false, _) => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_env("MEDGRAPH_LOG").format_timestamp(None).init();
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::{ContextKind, ErrorKind};
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                std::process::exit(0);
            }
            let message = e.to_string();
            let first = message.lines().next().unwrap_or("").trim_start_matches("error: ").to_string();
            let mut err = CliError::usage("usage", first);
            if let Some(arg) = e.get(ContextKind::InvalidArg) {
                err = err.at(arg.to_string());
            }
            err.help = Some(e.render().to_string());
            eprintln!("{}", err.to_json());
            std::process::exit(EXIT_USAGE);
        }
    };
    init_logging(&cli.global);
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("{}", e.to_json());
            std::process::exit(e.exit_code());
        }
    }
}
