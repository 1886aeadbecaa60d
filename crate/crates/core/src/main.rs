// Copyright 2026 The prodsketch Authors
// SPDX-License-Identifier: Apache-2.0

use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use prodsketch::cli::selftest::{run_selftest, SelftestOptions};
use prodsketch::cli::{cmd_estimate, cmd_exact, cmd_gen, CliError, CliResult, EstimateOptions, ExactOptions, ExitKind};
use prodsketch::streamgen::GenSpec;

#[derive(Parser)]
#[command(name = "prodsketch", version, about = "Streaming k-wise dependence estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the squared l2 dependence of a tuple stream in one pass.
    Estimate {
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        n: Option<u64>,
        #[arg(long, default_value_t = 0.2)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Input file; `-` or absent reads standard input.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Use s1 = 8 * 3^k / eps^2 (72 / eps^2 at k = 2).
        #[arg(long)]
        paper_constants: bool,
        #[arg(long)]
        snapshot_out: Option<PathBuf>,
        /// Hash field width in bits.
        #[arg(long, default_value_t = 64)]
        width: u32,
        /// Tuples aggregated per bank update.
        #[arg(long, default_value_t = 1 << 16)]
        batch: usize,
    },
    /// Compute the squared l2 dependence exactly from a frequency table.
    Exact {
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        n: Option<u64>,
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 1 << 24)]
        max_entries: u64,
    },
    /// Generate a synthetic stream.
    Gen {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        m: u64,
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value_t = 0)]
        rng_seed: u64,
        /// Output file; `-` writes to standard output.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the exhaustive oracle battery.
    Selftest {
        /// Skip the k = 3 enumerations.
        #[arg(long)]
        quick: bool,
        #[arg(long, hide = true)]
        corrupt_field: bool,
    },
}

fn open_input(path: Option<PathBuf>) -> CliResult<Box<dyn BufRead>> {
    match path {
        None => Ok(Box::new(io::stdin().lock())),
        Some(p) if p.as_os_str() == "-" => Ok(Box::new(io::stdin().lock())),
        Some(p) => Ok(Box::new(BufReader::with_capacity(1 << 20, File::open(p)?))),
    }
}

fn print_json<T: serde::Serialize>(value: &T) -> CliResult<()> {
    let line = serde_json::to_string(value).expect("reports serialize");
    writeln!(io::stdout(), "{line}")?;
    Ok(())
}

fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Estimate { k, n, epsilon, delta, seed, input, paper_constants, snapshot_out, width, batch } => {
            let opts = EstimateOptions { k, n, epsilon, delta, seed, width, paper_constants, snapshot_out, batch };
            let report = cmd_estimate(&opts, open_input(input)?)?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            print_json(&report)
        }
        Command::Exact { k, n, input, max_entries } => {
            let report = cmd_exact(&ExactOptions { k, n, max_entries }, open_input(input)?)?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            print_json(&report)
        }
        Command::Gen { n, k, m, lambda, rng_seed, out } => {
            let spec = GenSpec::new(n, k, m, lambda, rng_seed)?;
            if out.as_os_str() == "-" {
                let header = cmd_gen(&spec, io::stdout().lock())?;
                eprint!("{header}");
            } else {
                let header = cmd_gen(&spec, File::create(&out)?)?;
                print!("{header}");
            }
            Ok(())
        }
        Command::Selftest { quick, corrupt_field } => {
            let report = run_selftest(&SelftestOptions { quick, corrupt_field })?;
            let mut stdout = io::stdout().lock();
            for check in &report.checks {
                writeln!(stdout, "{check}")?;
            }
            let failed = report.checks.iter().filter(|c| !c.passed).count();
            writeln!(stdout, "{} checks, {failed} failed", report.checks.len())?;
            if failed > 0 {
                return Err(CliError {
                    kind: ExitKind::SelftestFailed,
                    error: prodsketch::Error::InvalidConfig(format!("{failed} self-test checks failed")),
                });
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { ExitKind::Usage as u8 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if e.kind != ExitKind::SelftestFailed {
                eprintln!("error: {e}");
            }
            ExitCode::from(e.kind as u8)
        }
    }
}
