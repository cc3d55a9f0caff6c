//! The `validate` subcommand.

use crate::CliError;
use clap::ValueEnum;
use hfcollapse::diagnostics::CheckReport;
use hfcollapse::validation;
use hfcollapse::GauntTable;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Level {
    Fast,
    Full,
}

/// Degree of the Gaunt table handed to the checks.
const GAUNT_DEGREE: usize = 16;

/// Build the Gaunt table, perturbing the entry at `corrupt` (one ordering only) if given.
pub fn gaunt_table(corrupt: Option<[usize; 3]>) -> Result<GauntTable, CliError> {
    let mut table = GauntTable::new(GAUNT_DEGREE).map_err(CliError::runtime)?;
    if let Some([a, b, c]) = corrupt {
        if a.max(b).max(c) > GAUNT_DEGREE {
            return Err(CliError::Config(format!("--corrupt-gaunt indices must be <= {GAUNT_DEGREE}")));
        }
        let v = table.value(a, b, c);
        table.overwrite(a, b, c, v + 1e-6 * v.abs().max(1.0));
    }
    Ok(table)
}

pub fn run(level: Level, gaunt: &GauntTable) -> Vec<CheckReport> {
    match level {
        Level::Fast => validation::fast_suite(gaunt),
        Level::Full => validation::full_suite(gaunt),
    }
}
