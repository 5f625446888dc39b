//! Command-line front end for the `gridcast-core` engines: per-layer
//! estimator tables, phase scans, self-check suites and Monte Carlo runs.

pub mod cache;
pub mod commands;
pub mod config;
pub mod error;
pub mod table;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use clap::{Parser, Subcommand};

use crate::cache::Cache;
use crate::commands::{exact, scan, simulate, verify};
use crate::config::{Format, OutputArgs};
use crate::error::CliError;
use crate::table::ResultTable;

#[derive(Debug, Parser)]
#[command(name = "gridcast", version, about = "Gaussian broadcast processes on grid posets")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    Exact(exact::ExactArgs),
    Scan(scan::ScanArgs),
    Verify(verify::VerifyArgs),
    Simulate(simulate::SimulateArgs),
}

/// Runs one parsed command and returns the process exit code.
pub fn execute(cli: &Cli) -> Result<i32, CliError> {
    match &cli.command {
        Command::Exact(a) => emit(&exact::run(a)?, &a.output),
        Command::Scan(a) => emit(&scan::run(a)?, &a.output),
        Command::Simulate(a) => emit(&simulate::run(a)?, &a.output),
        Command::Verify(a) => {
            let report = verify::run(a, Cache::from_env())?;
            write_to(a.out.as_deref(), |w| {
                serde_json::to_writer_pretty(&mut *w, &report)?;
                writeln!(w).map_err(|e| CliError::io("<output>", e))
            })?;
            Ok(if report.passed { 0 } else { 1 })
        }
    }
}

fn emit(table: &ResultTable, out: &OutputArgs) -> Result<i32, CliError> {
    let format: Format = out.format;
    write_to(out.out.as_deref(), |w| table.write(format, w))?;
    Ok(0)
}

fn write_to(path: Option<&Path>, f: impl FnOnce(&mut dyn Write) -> Result<(), CliError>) -> Result<(), CliError> {
    match path {
        Some(p) => {
            let file = File::create(p).map_err(|e| CliError::io(p, e))?;
            let mut w = BufWriter::new(file);
            f(&mut w)?;
            w.flush().map_err(|e| CliError::io(p, e))
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            f(&mut w)?;
            w.flush().map_err(|e| CliError::io("<stdout>", e))
        }
    }
}
