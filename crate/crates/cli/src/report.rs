//! The `report` subcommand: a Markdown summary of a finished run or sweep directory.

use crate::CliError;
use serde_json::Value;
use std::fmt::Write as _;
use std::path::Path;

fn read_json(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn num(v: &Value) -> String {
    match v.as_f64() {
        Some(x) => format!("{x:.6e}"),
        None if v.is_null() => "-".into(),
        None => v.to_string(),
    }
}

fn run_report(dir: &Path) -> Result<String, CliError> {
    let d = read_json(&dir.join("diagnostics.json"))?;
    let m = read_json(&dir.join("manifest.json"))?;
    let mut out = String::new();
    let _ = writeln!(out, "# Run report\n");
    let _ = writeln!(out, "- config sha256: `{}`", m["config_sha256"].as_str().unwrap_or("?"));
    let _ = writeln!(out, "- model: {}, coupling used: {}", d["model"], num(&m["coupling_used"]));
    let _ = writeln!(
        out,
        "- E₀ = {}, threshold = {}, margin = {}",
        num(&d["initial_energy"]),
        num(&d["threshold"]),
        num(&d["threshold_margin"])
    );
    match d["breakdown"].as_object() {
        Some(b) => {
            let _ = writeln!(out, "- breakdown: {} at t = {} ({})", b["reason"], num(&b["time"]), b["detail"]);
        }
        None => {
            let _ = writeln!(out, "- no breakdown; reached t = {}", num(&d["t_end"]));
        }
    }
    let _ = writeln!(
        out,
        "- steps: {} accepted, {} rejected; outside well-posed range: {}",
        d["accepted_steps"], d["rejected_steps"], d["outside_wellposed_range"]
    );
    let _ = writeln!(out, "\n| quantity | value |\n|---|---|");
    for key in [
        "energy_drift",
        "trace_drift",
        "l2_drift",
        "max_pauli_defect",
        "max_bogoliubov_defect",
        "max_pairing_excess",
        "sqrt_laplacian_growth",
        "max_l6eps",
    ] {
        let _ = writeln!(out, "| {key} | {} |", num(&d[key]));
    }
    if let Some(l2) = d["l2_derivatives"].as_array() {
        let _ = writeln!(out, "| d/dt Tr L²γ at 0 | {} |\n| d²/dt² Tr L²γ at 0 | {} |", num(&l2[0]), num(&l2[1]));
    }
    let vi = &d["virial_inequality"];
    let _ = writeln!(out, "\nVirial inequality: {} (margin {}). {}", vi["status"], num(&vi["margin"]), vi["detail"].as_str().unwrap_or(""));
    if let Some(env) = d["envelope"].as_object() {
        let _ = writeln!(
            out,
            "\nEnvelope: {}; predicted blow-up time {}; fitted C {}, C needed {}.",
            env["check"]["status"],
            num(&env["predicted_blowup_time"]),
            num(&env["envelope"]["fitted_constant"]),
            num(&env["constant_needed"])
        );
    }
    Ok(out)
}

fn sweep_report(dir: &Path) -> Result<String, CliError> {
    let path = dir.join("summary.csv");
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    let mut out = String::from("# Sweep report\n\n");
    let cols: Vec<&str> = header.split(',').collect();
    let _ = writeln!(out, "| {} |\n|{}|", cols.join(" | "), "---|".repeat(cols.len()));
    let mut n = 0;
    for line in lines {
        // the quoted status column is the only one that can contain commas
        let (head, rest) = line.split_once(",\"").unwrap_or((line, ""));
        let (status, tail) = rest.split_once("\",").unwrap_or((rest, ""));
        let _ = writeln!(out, "| {} | {status} | {} |", head.replace(',', " | "), tail.replace(',', " | "));
        n += 1;
    }
    if n == 0 {
        out.push_str("\nNo runs.\n");
    }
    Ok(out)
}

/// Write `report.md` into `dir` and return its text.
pub fn run(dir: &Path) -> Result<String, CliError> {
    let text = if dir.join("diagnostics.json").exists() {
        run_report(dir)?
    } else if dir.join("summary.csv").exists() {
        sweep_report(dir)?
    } else {
        return Err(CliError::Config(format!("{} holds neither a run nor a sweep", dir.display())));
    };
    let path = dir.join("report.md");
    std::fs::write(&path, &text).map_err(|e| CliError::io(&path, e))?;
    Ok(text)
}
