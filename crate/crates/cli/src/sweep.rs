//! The `sweep` subcommand: one simulate run per parameter value, summarized in summary.csv.

use crate::config::RunConfig;
use crate::simulate;
use crate::CliError;
use clap::ValueEnum;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum Axis {
    Kappa,
    LambdaCutoff,
    Mass,
}

impl Axis {
    fn name(self) -> &'static str {
        match self {
            Axis::Kappa => "kappa",
            Axis::LambdaCutoff => "lambda_cutoff",
            Axis::Mass => "mass",
        }
    }

    fn apply(self, cfg: &mut RunConfig, value: f64) -> Result<(), String> {
        match self {
            Axis::Kappa => cfg.potential.coupling = value,
            Axis::Mass => cfg.potential.mass = value,
            Axis::LambdaCutoff => {
                if !(value >= 0.0 && value.fract() == 0.0) {
                    return Err(format!("lambda_cutoff must be a non-negative integer, got {value}"));
                }
                cfg.lambda = value as usize;
            }
        }
        cfg.validate()
    }
}

pub const SUMMARY_COLUMNS: [&str; 10] = [
    "index",
    "axis",
    "value",
    "status",
    "energy",
    "threshold",
    "threshold_margin",
    "breakdown_time",
    "t_end",
    "predicted_blowup_time",
];

pub fn parse_values(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| v.parse::<f64>().map_err(|e| CliError::Config(format!("sweep value {v:?}: {e}"))))
        .collect()
}

struct Row {
    status: String,
    fields: [f64; 6],
}

fn one(template: &RunConfig, axis: Axis, value: f64, dir: &Path) -> Row {
    let mut cfg = template.clone();
    if let Err(e) = axis.apply(&mut cfg, value) {
        return Row { status: format!("config-error: {e}"), fields: [f64::NAN; 6] };
    }
    match simulate::run(&cfg, dir) {
        Ok(outcome) => {
            let d = &outcome.diagnostics;
            let status = match &d.breakdown {
                Some(b) => format!("breakdown: {}", b.reason),
                None => "survived".to_string(),
            };
            let failures = d.invariant_failures();
            let status = if failures.is_empty() { status } else { format!("{status}; invariant failure") };
            Row {
                status,
                fields: [
                    d.initial_energy,
                    d.threshold,
                    d.threshold_margin,
                    d.breakdown.as_ref().map_or(f64::NAN, |b| b.time),
                    d.t_end,
                    d.envelope.as_ref().and_then(|e| e.predicted_blowup_time).unwrap_or(f64::NAN),
                ],
            }
        }
        Err(e) => Row { status: format!("error: {e}"), fields: [f64::NAN; 6] },
    }
}

/// Run every value (in parallel over `threads` workers) and write `out/summary.csv`.
///
/// Per-run failures become rows; rows are written in input order regardless of scheduling.
pub fn run(template: &RunConfig, axis: Axis, values: &[f64], threads: usize, out: &Path) -> Result<usize, CliError> {
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let rows: Vec<Mutex<Option<Row>>> = values.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..threads.max(1).min(values.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= values.len() {
                    break;
                }
                let row = one(template, axis, values[i], &out.join(format!("run_{i:03}")));
                *rows[i].lock().expect("row lock") = Some(row);
            });
        }
    });

    let mut csv = SUMMARY_COLUMNS.join(",") + "\n";
    let mut failed = 0;
    for (i, (v, row)) in values.iter().zip(rows).enumerate() {
        let row = row.into_inner().expect("row lock").expect("every row is filled");
        if row.status.contains("error") || row.status.contains("invariant") {
            failed += 1;
        }
        let status = row.status.replace(['"', '\n'], "'");
        let _ = write!(csv, "{i},{},{v:.17e},\"{status}\"", axis.name());
        for f in row.fields {
            let _ = write!(csv, ",{f:.17e}");
        }
        csv.push('\n');
    }
    let path = out.join("summary.csv");
    std::fs::write(&path, csv).map_err(|e| CliError::io(&path, e))?;
    Ok(failed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_parse() {
        assert_eq!(parse_values("").unwrap(), Vec::<f64>::new());
        assert_eq!(parse_values(" 0.5, -1 ,2").unwrap(), vec![0.5, -1.0, 2.0]);
        assert!(parse_values("1,x").is_err());
    }
}
