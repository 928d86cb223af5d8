//! `sublinear`: runs one experiment from a JSON config and writes a report.
//!
//! Exit status: 0 when a check passes or a value was computed, 1 when a
//! verifier fails, 2 on configuration, size-limit or I/O errors.

mod config;
mod error;
mod report;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, ValueEnum};

use crate::config::Config;
use crate::error::CliError;
use crate::run::RunStatus;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(
    name = "sublinear",
    version,
    about = "Sublinear expectation experiments on path lattices"
)]
struct Args {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "./out")]
    out: PathBuf,
    /// RNG seed; overrides the config's `seed` [default: 0].
    #[arg(long)]
    seed: Option<u64>,
    /// Enumeration cap; overrides the config's `max_enum` [default: 10000000].
    #[arg(long)]
    max_enum: Option<u64>,
    /// `json` writes the report only; `csv` also writes the value table.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

fn execute(args: &Args) -> Result<RunStatus, CliError> {
    let start = Instant::now();
    let cfg = Config::load(&args.config)?.resolve(args.seed, args.max_enum);
    let outcome = run::run(&cfg)?;
    let report = report::build(&cfg, &outcome, start.elapsed().as_millis())?;
    let path = report::write_report(&args.out, &cfg.output.report, &report)?;
    eprintln!("{:?}: report written to {}", outcome.status, path.display());
    if args.format == Format::Csv {
        let path = report::write_values(&args.out, &cfg.output.values, &outcome.rows)?;
        eprintln!("values written to {}", path.display());
    }
    Ok(outcome.status)
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(RunStatus::Fail) => ExitCode::from(1),
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if let Some(p) = e.pointer() {
                eprintln!("pointer: {p}");
            }
            ExitCode::from(2)
        }
    }
}
