//! `zeipel`: analytic J2 ephemerides, oracle comparisons and verification
//! suites from a TOML config.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Repr;
use config::RunConfig;
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "zeipel", version, about = "Second-order J2 satellite theory")]
struct Cli {
    /// TOML config; every key is optional.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Theory order, overrides `theory.order`.
    #[arg(long, global = true, value_parser = clap::value_parser!(u8).range(1..=2))]
    order: Option<u8>,

    /// Also integrate the Cartesian reference trajectory.
    #[arg(long, global = true)]
    oracle: bool,

    /// Output directory, overrides `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Verification seed, overrides `verify.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Print the effective config and exit.
    #[arg(long, global = true)]
    print_config: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the analytic (and with --oracle the reference) ephemeris.
    Propagate,
    /// Analytic vs reference metrics and the J2-halving table.
    Compare,
    /// Run the property suite.
    Verify {
        /// Replace every property tolerance.
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Convert one state between representations.
    Elements {
        #[arg(long, value_enum)]
        from: Repr,
        #[arg(long, value_enum)]
        to: Repr,
        #[arg(num_args = 6, allow_negative_numbers = true, required = true)]
        values: Vec<f64>,
    },
}

fn run(cli: Cli) -> Result<String, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(order) = cli.order {
        cfg.theory.order = order;
    }
    if let Some(out) = cli.out {
        cfg.output.dir = out;
    }
    if let Some(seed) = cli.seed {
        cfg.verify.seed = seed;
    }
    if let Some(Command::Verify { tolerance: Some(t) }) = cli.command {
        cfg.verify.tolerance = Some(t);
    }
    if cli.print_config {
        return Ok(cfg.to_toml());
    }
    match cli.command {
        None => Err(CliError::Usage("no command given (propagate, compare, verify, elements)".into())),
        Some(Command::Propagate) => commands::propagate(&cfg, cli.oracle),
        Some(Command::Compare) => commands::compare_cmd(&cfg, cli.oracle),
        Some(Command::Verify { .. }) => commands::verify(&cfg),
        Some(Command::Elements { from, to, values }) => {
            commands::elements(&cfg.physical_model()?, from, to, &values)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
