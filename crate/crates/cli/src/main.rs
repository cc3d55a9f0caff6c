//! `hfcollapse`: simulate, validate, sweep and report.
//!
//! Exit codes: 0 for success (including an observed breakdown), 1 for configuration
//! and I/O errors, 2 for invariant failures.

mod config;
mod report;
mod simulate;
mod svg;
mod sweep;
mod validate;

use clap::{Parser, Subcommand};
use config::RunConfig;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("invariant failure: {0}")]
    Invariant(String),
}

impl CliError {
    pub fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }

    /// Errors from setting up a run are configuration errors.
    pub fn config(e: hfcollapse::Error) -> Self {
        CliError::Config(e.to_string())
    }

    /// Errors during a run: constraint violations are invariant failures, the rest I/O-like.
    pub fn runtime(e: hfcollapse::Error) -> Self {
        match e {
            hfcollapse::Error::Constraint(m) => CliError::Invariant(m),
            hfcollapse::Error::Io(e) => CliError::Io(e.to_string()),
            other => CliError::Invariant(other.to_string()),
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Invariant(_) => 2,
        }
    }
}

#[derive(Parser)]
#[command(name = "hfcollapse", version, about = "Spherically symmetric HF / cutoff-HFB collapse simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration and write its artifacts.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the verification suite.
    Validate {
        #[arg(long, value_enum, default_value = "fast")]
        level: validate::Level,
        /// Perturb one Gaunt entry, given as l1,l2,l3, to check that the suite catches it.
        #[arg(long, value_delimiter = ',')]
        corrupt_gaunt: Option<Vec<usize>>,
        /// Also write the reports as JSON into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a template configuration for each value of one parameter.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        axis: sweep::Axis,
        /// Comma-separated values; an empty string gives an empty sweep.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        threads: usize,
    },
    /// Summarize a run or sweep directory into report.md.
    Report {
        #[arg(long)]
        out: PathBuf,
    },
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { config, out } => {
            let cfg = RunConfig::load(&config)?;
            let outcome = simulate::run(&cfg, &out)?;
            let d = &outcome.diagnostics;
            match &d.breakdown {
                Some(b) => println!("breakdown: {} at t = {:.6} ({})", b.reason, b.time, b.detail),
                None => println!("completed: t = {:.6}", d.t_end),
            }
            let failures = d.invariant_failures();
            if failures.is_empty() {
                Ok(())
            } else {
                Err(CliError::Invariant(failures.join("; ")))
            }
        }
        Command::Validate { level, corrupt_gaunt, out } => {
            let corrupt = match corrupt_gaunt.as_deref() {
                None => None,
                Some(&[a, b, c]) => Some([a, b, c]),
                Some(_) => return Err(CliError::Config("--corrupt-gaunt takes exactly three indices".into())),
            };
            let gaunt = validate::gaunt_table(corrupt)?;
            let reports = validate::run(level, &gaunt);
            for r in &reports {
                println!("{:<24} {} | {}", r.name, if r.passed() { "PASS" } else { "FAIL" }, r.detail);
            }
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
                let path = dir.join("validation.json");
                let text = serde_json::to_string_pretty(&reports).map_err(|e| CliError::Io(e.to_string()))?;
                std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
            }
            let failed: Vec<&str> = reports.iter().filter(|r| !r.passed()).map(|r| r.name.as_str()).collect();
            if failed.is_empty() {
                Ok(())
            } else {
                Err(CliError::Invariant(format!("failed checks: {}", failed.join(", "))))
            }
        }
        Command::Sweep { config, axis, values, out, threads } => {
            let cfg = RunConfig::load(&config)?;
            let values = sweep::parse_values(&values)?;
            let failed = sweep::run(&cfg, axis, &values, threads, &out)?;
            println!("{} runs, {failed} failed; summary in {}", values.len(), out.join("summary.csv").display());
            Ok(())
        }
        Command::Report { out } => {
            print!("{}", report::run(&out)?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // usage errors are configuration errors
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hfcollapse: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
