//! The `simulate` subcommand: one run from a config, with all artifacts.

use crate::config::{Model, RunConfig};
use crate::svg::{line_plot, Series};
use crate::CliError;
use hfcollapse::checkpoint;
use hfcollapse::diagnostics::{
    envelope_check, envelope_constant_needed, l2_moment_derivatives, step2_inequality, CheckReport, Envelope,
};
use hfcollapse::dynamics::{integrate_observed, BreakdownReason, Trajectory, CSV_COLUMNS};
use hfcollapse::initial::{blowup_threshold, make_initial_data};
use hfcollapse::radial::build_grid;
use hfcollapse::state::{energy, Constants};
use hfcollapse::system::System;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fs;
use std::io::BufWriter;
use std::path::Path;
use std::sync::Arc;

/// Tolerance on the sampled Pauli and Bogoliubov defects.
const CONSTRAINT_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug, Serialize)]
pub struct BreakdownRecord {
    pub reason: String,
    pub time: f64,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct EnvelopeRecord {
    pub envelope: Envelope,
    pub predicted_blowup_time: Option<f64>,
    pub constant_needed: f64,
    pub check: CheckReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct Diagnostics {
    pub model: Model,
    pub coupling: f64,
    pub initial_energy: f64,
    pub threshold: f64,
    /// threshold - E₀; positive means the blow-up condition holds.
    pub threshold_margin: f64,
    pub t_end: f64,
    pub breakdown: Option<BreakdownRecord>,
    pub accepted_steps: u64,
    pub rejected_steps: u64,
    pub outside_wellposed_range: bool,
    pub energy_drift: f64,
    pub trace_drift: f64,
    pub l2_drift: f64,
    /// d/dt and d²/dt² of Tr |L|²γ at t = 0 (HFB only).
    pub l2_derivatives: Option<(f64, f64)>,
    pub max_pauli_defect: f64,
    pub max_bogoliubov_defect: f64,
    pub max_pairing_excess: f64,
    pub sqrt_laplacian_growth: f64,
    pub max_l6eps: f64,
    pub virial_inequality: CheckReport,
    pub envelope: Option<EnvelopeRecord>,
}

impl Diagnostics {
    /// Hard invariants: constraints at every sample, and the virial inequality for runs without breakdown.
    pub fn invariant_failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.max_pauli_defect > CONSTRAINT_TOLERANCE || self.max_bogoliubov_defect > CONSTRAINT_TOLERANCE {
            out.push(format!(
                "constraints: Pauli {:.3e}, Bogoliubov {:.3e}",
                self.max_pauli_defect, self.max_bogoliubov_defect
            ));
        }
        if self.max_pairing_excess > 0.0 {
            out.push(format!("Tr α*α exceeds Tr γ by {:.3e}", self.max_pairing_excess));
        }
        if self.breakdown.as_ref().is_some_and(|b| b.reason == BreakdownReason::ConstraintViolation.as_str()) {
            out.push("integrator stopped on a constraint violation".into());
        }
        // Past the onset of breakdown the state is concentrated at the grid scale, where the
        // discrete commutator identities behind the inequality no longer hold; it is reported only.
        if self.breakdown.is_none() && !self.virial_inequality.passed() {
            out.push(format!("virial inequality: {}", self.virial_inequality.detail));
        }
        out
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    config_sha256: String,
    config: &'a RunConfig,
    constants: Constants,
    /// Lower-right block of the HFB generator is the complex conjugate of H_l in the real grid basis.
    conjugation: &'static str,
    coupling_used: f64,
    potential: hfcollapse::potential::PotentialSpec,
    csv_columns: &'static [&'static str],
    versions: Versions,
    artifacts: Vec<String>,
}

#[derive(Serialize)]
struct Versions {
    hfcollapse: &'static str,
    hfcollapse_cli: &'static str,
}

pub struct RunOutcome {
    pub diagnostics: Diagnostics,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    fs::write(path, text + "\n").map_err(|e| CliError::io(path, e))
}

pub fn config_hash(cfg: &RunConfig) -> String {
    hex::encode(Sha256::digest(cfg.canonical_json().as_bytes()))
}

/// Run `cfg` and write trajectory.csv, checkpoints/, final.bin, diagnostics.json, plots/ and
/// manifest.json into `out`.
pub fn run(cfg: &RunConfig, out: &Path) -> Result<RunOutcome, CliError> {
    let grid = Arc::new(build_grid(cfg.grid.n, cfg.grid.radius, cfg.grid.scheme).map_err(CliError::config)?);
    let pot = cfg.potential_spec().map_err(CliError::config)?;
    let sys = System::new(grid, pot, cfg.lambda).map_err(CliError::config)?;
    let data = make_initial_data(&sys, &cfg.initial).map_err(CliError::config)?;
    let coupling = if cfg.initial.target.is_some() { cfg.potential.boost * data.coupling } else { data.coupling };
    let sys = sys.with_coupling(coupling).map_err(CliError::config)?;
    let state = match cfg.model {
        Model::Hfb if cfg.zero_pairing => data.state.to_hfb(),
        _ => data.state,
    };

    fs::create_dir_all(out.join("checkpoints")).map_err(|e| CliError::io(out, e))?;
    let mut artifacts = vec!["trajectory.csv".to_string(), "final.bin".into(), "diagnostics.json".into()];
    let every = cfg.output.checkpoint_every;
    let mut recorded = 0usize;
    let mut observer = |_: &hfcollapse::dynamics::Sample, st: &hfcollapse::state::State| -> hfcollapse::Result<()> {
        if every > 0 && recorded % every == 0 {
            let name = format!("checkpoints/ckpt_{:05}.bin", recorded / every);
            checkpoint::save(st, &sys.potential, &out.join(&name))?;
            artifacts.push(name);
        }
        recorded += 1;
        Ok(())
    };
    let traj = integrate_observed(&sys, &state, &cfg.integrator, &mut observer).map_err(CliError::runtime)?;

    let csv = out.join("trajectory.csv");
    let f = fs::File::create(&csv).map_err(|e| CliError::io(&csv, e))?;
    traj.write_csv(BufWriter::new(f)).map_err(|e| CliError::io(&csv, e))?;
    checkpoint::save(&traj.final_state, &sys.potential, &out.join("final.bin")).map_err(CliError::runtime)?;

    let diagnostics = diagnose(cfg, &sys, &state, &traj)?;
    write_json(&out.join("diagnostics.json"), &diagnostics)?;
    if cfg.output.plots {
        artifacts.extend(write_plots(&traj, diagnostics.envelope.as_ref().map(|e| &e.envelope), out)?);
    }
    artifacts.push("manifest.json".into());
    let manifest = Manifest {
        config_sha256: config_hash(cfg),
        config: cfg,
        constants: Constants::current(),
        conjugation: "complex-conjugate",
        coupling_used: coupling,
        potential: sys.potential.clone(),
        csv_columns: &CSV_COLUMNS,
        versions: Versions { hfcollapse: hfcollapse::VERSION, hfcollapse_cli: env!("CARGO_PKG_VERSION") },
        artifacts,
    };
    write_json(&out.join("manifest.json"), &manifest)?;
    Ok(RunOutcome { diagnostics })
}

fn diagnose(
    cfg: &RunConfig,
    sys: &System,
    initial: &hfcollapse::state::State,
    traj: &Trajectory,
) -> Result<Diagnostics, CliError> {
    let s = &traj.samples;
    let e0 = energy(sys, initial).map_err(CliError::runtime)?.total;
    let threshold = blowup_threshold(sys, initial.trace(), traj.hfb);
    let l2_derivatives = if traj.hfb { Some(l2_moment_derivatives(sys, initial).map_err(CliError::runtime)?) } else { None };
    let virial_inequality = step2_inequality(sys, traj, cfg.diagnostics.virial_slack);
    let fit = cfg.diagnostics.envelope_fit_samples;
    let envelope = (s.len() > fit && s.iter().all(|x| x.virial_m_rate.is_some())).then(|| {
        let (env, check) = envelope_check(sys, traj, fit, 1.0);
        EnvelopeRecord {
            predicted_blowup_time: env.zero_time(),
            constant_needed: envelope_constant_needed(traj, &env),
            envelope: env,
            check,
        }
    });
    let fold = |f: &dyn Fn(&hfcollapse::dynamics::Sample) -> f64| s.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
    Ok(Diagnostics {
        model: cfg.model,
        coupling: sys.potential.coupling,
        initial_energy: e0,
        threshold,
        threshold_margin: threshold - e0,
        t_end: s.last().map_or(0.0, |x| x.t),
        breakdown: traj.breakdown.as_ref().map(|b| BreakdownRecord {
            reason: b.reason.as_str().into(),
            time: b.time,
            detail: b.detail.clone(),
        }),
        accepted_steps: traj.accepted_steps,
        rejected_steps: traj.rejected_steps,
        outside_wellposed_range: traj.outside_wellposed_range,
        energy_drift: traj.max_relative_drift(|x| x.energy),
        trace_drift: traj.max_relative_drift(|x| x.moments.trace),
        l2_drift: traj.max_relative_drift(|x| x.moments.l2),
        l2_derivatives,
        max_pauli_defect: fold(&|x| x.constraints.pauli_defect),
        max_bogoliubov_defect: fold(&|x| x.constraints.bogoliubov_defect),
        max_pairing_excess: fold(&|x| x.moments.pairing_mass - x.moments.trace),
        sqrt_laplacian_growth: fold(&|x| x.moments.sqrt_laplacian) / s[0].moments.sqrt_laplacian,
        max_l6eps: fold(&|x| x.moments.l6eps),
        virial_inequality,
        envelope,
    })
}

fn write_plots(traj: &Trajectory, env: Option<&Envelope>, out: &Path) -> Result<Vec<String>, CliError> {
    let dir = out.join("plots");
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let s = &traj.samples;
    let pts = |f: &dyn Fn(&hfcollapse::dynamics::Sample) -> f64| -> Vec<(f64, f64)> { s.iter().map(|x| (x.t, f(x))).collect() };
    let e0 = s[0].energy;
    let mut virial = vec![Series { label: "Tr Mγ", points: pts(&|x| x.moments.virial_m), dashed: false }];
    if let Some(env) = env {
        virial.push(Series { label: "envelope", points: pts(&|x| env.at(x.t)), dashed: true });
    }
    let plots = [
        ("virial_m.svg", line_plot("Tr Mγ and envelope", "t", "Tr Mγ", &virial)),
        (
            "energy_drift.svg",
            line_plot(
                "Relative energy drift",
                "t",
                "(E - E₀)/|E₀|",
                &[Series { label: "energy", points: pts(&|x| (x.energy - e0) / e0.abs().max(f64::MIN_POSITIVE)), dashed: false }],
            ),
        ),
        ("l2.svg", line_plot("Tr |L|²γ", "t", "Tr |L|²γ", &[Series { label: "Tr |L|²γ", points: pts(&|x| x.moments.l2), dashed: false }])),
        (
            "sqrt_laplacian.svg",
            line_plot(
                "Tr (-Δ)^½ γ",
                "t",
                "Tr (-Δ)^½ γ",
                &[Series { label: "Tr (-Δ)^½ γ", points: pts(&|x| x.moments.sqrt_laplacian), dashed: false }],
            ),
        ),
    ];
    let mut names = Vec::new();
    for (name, svg) in plots {
        let p = dir.join(name);
        fs::write(&p, svg).map_err(|e| CliError::io(&p, e))?;
        names.push(format!("plots/{name}"));
    }
    Ok(names)
}
