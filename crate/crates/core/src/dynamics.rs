//! Time integration of the HF flow and the cutoff HFB flow.

use crate::diagnostics::virial_m_rate;
use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::meanfield::{assemble, g_alpha_term, MeanFieldBlocks};
use crate::state::{check_constraints, energy, moments, ConstraintReport, Derivative, Energy, Moments, State};
use crate::system::System;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// dγ/dt (and dα/dt) for the blocks assembled from `state`.
pub fn rhs(sys: &System, state: &State, blocks: &MeanFieldBlocks) -> Result<Derivative> {
    state.check_system(sys)?;
    let stamp = state.fingerprint();
    if blocks.stamp != stamp {
        return Err(Error::StaleBlocks { assembled: blocks.stamp, current: stamp });
    }
    let mut dg = Vec::with_capacity(state.g.len());
    for (h, g) in blocks.h.iter().zip(&state.g) {
        let x = h.mul(g);
        dg.push((&x - &x.adjoint()).mul_neg_i());
    }
    let da = match (&state.a, &blocks.pi) {
        (Some(a), Some(pi)) => {
            let mut out = Vec::with_capacity(a.len());
            for l in 0..a.len() {
                dg[l] += &g_alpha_term(&pi[l], &a[l]);
                let y = blocks.h[l].mul(&a[l]);
                let z = state.g[l].mul(&pi[l]);
                let mut s = &y - &y.transpose();
                s += &pi[l];
                s -= &(&z - &z.transpose());
                out.push(s.mul_neg_i());
            }
            Some(out)
        }
        _ => None,
    };
    Ok(Derivative { g: dg, a: da })
}

pub fn hf_rhs(sys: &System, state: &State, blocks: &MeanFieldBlocks) -> Result<Derivative> {
    if state.is_hfb() {
        return Err(Error::InvalidParameter("hf_rhs called with a pairing state".into()));
    }
    rhs(sys, state, blocks)
}

pub fn hfb_rhs(sys: &System, state: &State, blocks: &MeanFieldBlocks) -> Result<Derivative> {
    if !state.is_hfb() {
        return Err(Error::InvalidParameter("hfb_rhs called without pairing".into()));
    }
    rhs(sys, state, blocks)
}

fn eval(sys: &System, state: &State) -> Result<Derivative> {
    let blocks = assemble(sys, state)?;
    rhs(sys, state, &blocks)
}

/// One classical RK4 step.
pub fn rk4_step(sys: &System, state: &State, dt: f64) -> Result<State> {
    let k1 = eval(sys, state)?;
    let k2 = eval(sys, &state.axpy(0.5 * dt, &k1))?;
    let k3 = eval(sys, &state.axpy(0.5 * dt, &k2))?;
    let k4 = eval(sys, &state.axpy(dt, &k3))?;
    let d = Derivative::combine(&[(1.0, &k1), (2.0, &k2), (2.0, &k3), (1.0, &k4)]);
    let mut next = state.axpy(dt / 6.0, &d);
    next.time = state.time + dt;
    next.step = state.step + 1;
    Ok(next)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    pub dt_init: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub t_final: f64,
    /// Spacing of recorded samples.
    pub sample_interval: f64,
    /// Steps between projections; 0 disables projection.
    pub projection_interval: usize,
    /// Local error per step (step doubling), relative to the largest entry of the state.
    pub step_tolerance: f64,
    /// Allowed energy change per step relative to the initial energy scale.
    pub energy_step_tolerance: f64,
    /// Constraint drift tolerated during evolution; larger violations end the run.
    pub constraint_tolerance: f64,
    /// Spectral clamping at projection time only starts above this defect.
    pub clamp_floor: f64,
    /// Breakdown when Tr (-Δ)^{1/2} γ exceeds this multiple of its initial value.
    pub kinetic_ceiling: f64,
    /// Breakdown when the fraction of Tr γ in r >= 0.95 R exceeds this.
    pub boundary_threshold: f64,
    /// Take steps of exactly this size with no error control.
    pub fixed_dt: Option<f64>,
    /// Record d/dt Tr Mγ at each sample (needed by the envelope fit).
    pub record_virial_rate: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            dt_init: 1e-2,
            dt_min: 1e-9,
            dt_max: 5e-2,
            t_final: 1.0,
            sample_interval: 0.05,
            projection_interval: 10,
            step_tolerance: 1e-10,
            energy_step_tolerance: 1e-10,
            constraint_tolerance: 1e-6,
            clamp_floor: 1e-8,
            kinetic_ceiling: 10.0,
            boundary_threshold: 1e-4,
            fixed_dt: None,
            record_virial_rate: true,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = |x: f64, name: &str| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be positive, got {x}")))
            }
        };
        pos(self.dt_init, "dt_init")?;
        pos(self.dt_min, "dt_min")?;
        pos(self.dt_max, "dt_max")?;
        pos(self.t_final, "t_final")?;
        pos(self.sample_interval, "sample_interval")?;
        pos(self.step_tolerance, "step_tolerance")?;
        pos(self.energy_step_tolerance, "energy_step_tolerance")?;
        pos(self.constraint_tolerance, "constraint_tolerance")?;
        pos(self.clamp_floor, "clamp_floor")?;
        pos(self.kinetic_ceiling, "kinetic_ceiling")?;
        pos(self.boundary_threshold, "boundary_threshold")?;
        if self.dt_min >= self.dt_init {
            return Err(Error::InvalidParameter("dt_min must be below dt_init".into()));
        }
        if let Some(h) = self.fixed_dt {
            pos(h, "fixed_dt")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BreakdownReason {
    DtCollapse,
    KineticCeiling,
    BoundaryLeak,
    ConstraintViolation,
}

impl BreakdownReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::DtCollapse => "dt-collapse",
            Self::KineticCeiling => "kinetic-ceiling",
            Self::BoundaryLeak => "boundary-leak",
            Self::ConstraintViolation => "constraint-violation",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Breakdown {
    pub reason: BreakdownReason,
    pub time: f64,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub dt: f64,
    pub energy: f64,
    pub energy_parts: Energy,
    pub moments: Moments,
    pub constraints: ConstraintReport,
    pub virial_m_rate: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub hfb: bool,
    pub samples: Vec<Sample>,
    pub breakdown: Option<Breakdown>,
    pub final_state: State,
    pub accepted_steps: u64,
    pub rejected_steps: u64,
    /// HFB with κ >= 4/π, outside the proved well-posedness range.
    pub outside_wellposed_range: bool,
}

pub const CSV_COLUMNS: [&str; 15] = [
    "t",
    "dt",
    "energy",
    "trace",
    "kinetic",
    "l2",
    "virial_m",
    "virial_a",
    "pairing_mass",
    "pauli_defect",
    "bogoliubov_defect",
    "boundary_density",
    "sqrt_laplacian",
    "l6eps",
    "virial_m_rate",
];

impl Trajectory {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", CSV_COLUMNS.join(","))?;
        for s in &self.samples {
            let m = &s.moments;
            let vals = [
                s.t,
                s.dt,
                s.energy,
                m.trace,
                m.kinetic,
                m.l2,
                m.virial_m,
                m.virial_a,
                m.pairing_mass,
                s.constraints.pauli_defect,
                s.constraints.bogoliubov_defect,
                m.boundary_density,
                m.sqrt_laplacian,
                m.l6eps,
                s.virial_m_rate.unwrap_or(f64::NAN),
            ];
            let row: Vec<String> = vals.iter().map(|v| format!("{v:.17e}")).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn max_relative_drift<F: Fn(&Sample) -> f64>(&self, f: F) -> f64 {
        let x0 = f(&self.samples[0]);
        let scale = x0.abs().max(f64::MIN_POSITIVE);
        self.samples.iter().map(|s| (f(s) - x0).abs() / scale).fold(0.0, f64::max)
    }
}

fn sample(sys: &System, state: &State, dt: f64, record_rate: bool) -> Result<Sample> {
    let e = energy(sys, state)?;
    Ok(Sample {
        t: state.time,
        dt,
        energy: e.total,
        energy_parts: e,
        moments: moments(sys, state)?,
        constraints: check_constraints(state),
        virial_m_rate: if record_rate { Some(virial_m_rate(sys, state)?) } else { None },
    })
}

/// Re-hermitize g, re-antisymmetrize a and clamp the spectrum of Γ into [0, 1].
///
/// Returns the size of the clamp that was needed; the caller treats anything beyond
/// its tolerance as a constraint violation and leaves the state untouched.
pub fn project(state: &mut State, clamp_floor: f64, clamp_limit: f64) -> f64 {
    for g in state.g.iter_mut() {
        *g = g.hermitian_part();
    }
    if let Some(a) = state.a.as_mut() {
        for x in a.iter_mut() {
            *x = x.antisymmetric_part();
        }
    }
    let rep = check_constraints(state);
    let defect = rep.pauli_defect.max(rep.bogoliubov_defect);
    if defect <= clamp_floor || defect > clamp_limit {
        return defect;
    }
    let n = state.grid.len();
    match state.a.as_mut() {
        None => {
            for g in state.g.iter_mut() {
                *g = g.hermitian_function(|x| x.clamp(0.0, 1.0));
            }
        }
        Some(a) => {
            for (g, al) in state.g.iter_mut().zip(a.iter_mut()) {
                let gamma = generalized_density(g, al);
                let c = gamma.hermitian_function(|x| x.clamp(0.0, 1.0));
                let (ng, na) = split_generalized(&c, n);
                *g = ng.hermitian_part();
                *al = na.antisymmetric_part();
            }
        }
    }
    defect
}

/// Γ = [[g, a], [a^*, 1 - conj(g)]].
pub fn generalized_density(g: &CMat, a: &CMat) -> CMat {
    let n = g.nrows();
    let mut out = CMat::zeros(2 * n);
    let ad = a.adjoint();
    for i in 0..n {
        for j in 0..n {
            out.re[(i, j)] = g.re[(i, j)];
            out.im[(i, j)] = g.im[(i, j)];
            out.re[(i, n + j)] = a.re[(i, j)];
            out.im[(i, n + j)] = a.im[(i, j)];
            out.re[(n + i, j)] = ad.re[(i, j)];
            out.im[(n + i, j)] = ad.im[(i, j)];
            out.re[(n + i, n + j)] = if i == j { 1.0 } else { 0.0 } - g.re[(i, j)];
            out.im[(n + i, n + j)] = g.im[(i, j)];
        }
    }
    out
}

fn split_generalized(c: &CMat, n: usize) -> (CMat, CMat) {
    let g = CMat::from_parts(c.re.view((0, 0), (n, n)).into_owned(), c.im.view((0, 0), (n, n)).into_owned());
    let a = CMat::from_parts(c.re.view((0, n), (n, n)).into_owned(), c.im.view((0, n), (n, n)).into_owned());
    (g, a)
}

/// Integrate from `initial` until `cfg.t_final` or breakdown.
pub fn integrate(sys: &System, initial: &State, cfg: &IntegratorConfig) -> Result<Trajectory> {
    integrate_observed(sys, initial, cfg, &mut |_, _| Ok(()))
}

/// As `integrate`, calling `observer` with every recorded sample and the state it was taken from.
pub fn integrate_observed(
    sys: &System,
    initial: &State,
    cfg: &IntegratorConfig,
    observer: &mut dyn FnMut(&Sample, &State) -> Result<()>,
) -> Result<Trajectory> {
    cfg.validate()?;
    initial.check_system(sys)?;
    let mut state = initial.clone();
    let t0 = state.time;
    let t_end = t0 + cfg.t_final;
    let first = sample(sys, &state, 0.0, cfg.record_virial_rate)?;
    observer(&first, &state)?;
    let e0 = first.energy;
    let escale = e0.abs().max(first.moments.kinetic.abs()).max(f64::MIN_POSITIVE);
    let ceiling = cfg.kinetic_ceiling * first.moments.sqrt_laplacian;
    let mut samples = vec![first];
    let mut breakdown = None;
    let mut dt = cfg.fixed_dt.unwrap_or(cfg.dt_init).min(cfg.dt_max.max(cfg.fixed_dt.unwrap_or(0.0)));
    let mut next_sample = t0 + cfg.sample_interval;
    let mut e_prev = e0;
    let (mut accepted, mut rejected) = (0u64, 0u64);
    let mut since_projection = 0usize;
    let eps = 1e-12 * cfg.sample_interval;

    while state.time < t_end - eps {
        let target = next_sample.min(t_end);
        let remaining = target - state.time;
        let h = if dt >= remaining - eps { remaining } else { dt };
        let (next, used) = if cfg.fixed_dt.is_some() {
            (rk4_step(sys, &state, h)?, h)
        } else {
            let full = rk4_step(sys, &state, h)?;
            let half = rk4_step(sys, &state, 0.5 * h)?;
            let fine = rk4_step(sys, &half, 0.5 * h)?;
            let scale = state.g.iter().map(|g| g.max_abs()).fold(0.0, f64::max).max(1.0);
            let err = fine.distance(&full) / 15.0 / scale;
            let e_new = energy(sys, &fine)?.total;
            let de = (e_new - e_prev).abs() / escale;
            let ok = err.is_finite() && err <= cfg.step_tolerance && de <= cfg.energy_step_tolerance;
            if !ok {
                rejected += 1;
                let factor = if err.is_finite() && err > 0.0 {
                    (0.9 * (cfg.step_tolerance / err).powf(0.2)).clamp(0.1, 0.5)
                } else {
                    0.25
                };
                dt = h * factor;
                if dt < cfg.dt_min {
                    breakdown = Some(Breakdown {
                        reason: BreakdownReason::DtCollapse,
                        time: state.time,
                        detail: format!("step {dt:.3e} below dt_min {:.3e} (error {err:.3e}, energy step {de:.3e})", cfg.dt_min),
                    });
                    break;
                }
                continue;
            }
            e_prev = e_new;
            let grow = if err > 0.0 { (0.9 * (cfg.step_tolerance / err).powf(0.2)).clamp(1.0, 2.0) } else { 2.0 };
            // Only grow from full steps; a step clipped to a sample time says nothing about dt.
            if h >= dt * (1.0 - 1e-12) {
                dt = (h * grow).min(cfg.dt_max);
            }
            let mut fine = fine;
            fine.step = state.step + 1;
            (fine, h)
        };
        state = next;
        accepted += 1;
        if (state.time - target).abs() <= eps {
            state.time = target;
        }
        since_projection += 1;
        if cfg.projection_interval > 0 && since_projection >= cfg.projection_interval {
            since_projection = 0;
            let defect = project(&mut state, cfg.clamp_floor, cfg.constraint_tolerance);
            if defect > cfg.constraint_tolerance {
                breakdown = Some(Breakdown {
                    reason: BreakdownReason::ConstraintViolation,
                    time: state.time,
                    detail: format!("constraint defect {defect:.3e}"),
                });
            } else {
                // projection moves the state; the next step is judged from here
                e_prev = energy(sys, &state)?.total;
            }
        }
        let massless: Vec<_> = (0..=state.lambda()).map(|l| &sys.massless.get(l).matrix).collect();
        let sl = state.sector_expectation(&massless);
        if breakdown.is_none() && sl > ceiling {
            breakdown = Some(Breakdown {
                reason: BreakdownReason::KineticCeiling,
                time: state.time,
                detail: format!("Tr (-Δ)^(1/2) γ = {sl:.4e} exceeds {ceiling:.4e}"),
            });
        }
        let at_sample = state.time >= target - eps;
        if at_sample || breakdown.is_some() {
            let s = sample(sys, &state, used, cfg.record_virial_rate)?;
            if breakdown.is_none() {
                if s.moments.boundary_density > cfg.boundary_threshold {
                    breakdown = Some(Breakdown {
                        reason: BreakdownReason::BoundaryLeak,
                        time: state.time,
                        detail: format!("boundary fraction {:.3e}", s.moments.boundary_density),
                    });
                } else if !s.constraints.holds(cfg.constraint_tolerance) {
                    breakdown = Some(Breakdown {
                        reason: BreakdownReason::ConstraintViolation,
                        time: state.time,
                        detail: format!("constraint defect {:.3e}", s.constraints.worst()),
                    });
                }
            }
            observer(&s, &state)?;
            samples.push(s);
            if at_sample {
                next_sample = target + cfg.sample_interval;
            }
        }
        if breakdown.is_some() {
            break;
        }
    }
    Ok(Trajectory {
        hfb: initial.is_hfb(),
        samples,
        breakdown,
        final_state: state,
        accepted_steps: accepted,
        rejected_steps: rejected,
        outside_wellposed_range: initial.is_hfb() && sys.potential.coupling >= 4.0 / std::f64::consts::PI,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub applicable: bool,
    pub max_deviation: f64,
    pub max_pairing: f64,
    pub note: String,
}

/// Run HF and HFB (α₀ = 0) from the same γ₀ and compare the trajectories sector by sector.
pub fn hf_vs_hfb_consistency(sys: &System, initial: &State, cfg: &IntegratorConfig) -> Result<ConsistencyReport> {
    if initial.pairing_mass() > 0.0 {
        return Ok(ConsistencyReport {
            applicable: false,
            max_deviation: f64::NAN,
            max_pairing: initial.pairing_mass(),
            note: "initial pairing is nonzero; the HF reduction does not apply".into(),
        });
    }
    let hf0 = State { a: None, ..initial.clone() };
    let hfb0 = hf0.to_hfb();
    // Fixed steps so that both runs see identical time grids.
    let h = cfg.fixed_dt.unwrap_or(cfg.dt_init);
    let steps = (cfg.t_final / h).round().max(1.0) as usize;
    let h = cfg.t_final / steps as f64;
    let (mut x, mut y) = (hf0, hfb0);
    let mut dev: f64 = 0.0;
    let mut pair: f64 = 0.0;
    for _ in 0..steps {
        x = rk4_step(sys, &x, h)?;
        y = rk4_step(sys, &y, h)?;
        for (gx, gy) in x.g.iter().zip(&y.g) {
            dev = dev.max((gx - gy).max_abs());
        }
        pair = pair.max(y.pairing_mass());
    }
    Ok(ConsistencyReport {
        applicable: true,
        max_deviation: dev,
        max_pairing: pair,
        note: format!("{steps} RK4 steps of {h:.3e}"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::initial::random_state;
    use crate::potential::{PotentialSpec, WSpec};
    use crate::radial::{build_grid, GridScheme};
    use crate::state::energy;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn system(kappa: f64, lambda: usize, w: WSpec) -> System {
        let grid = Arc::new(build_grid(32, 10.0, GridScheme::Uniform).unwrap());
        let pot = PotentialSpec::new(kappa, 0.7, w, 0.5, 20.0).unwrap();
        System::new(grid, pot, lambda).unwrap()
    }

    fn energy_rate(sys: &System, st: &State, d: &Derivative) -> (f64, f64) {
        let h = 1e-4;
        let e = |s: f64| energy(sys, &st.axpy(s, d)).unwrap().total;
        let rate = (8.0 * (e(h) - e(-h)) - (e(2.0 * h) - e(-2.0 * h))) / (12.0 * h);
        let scale = d.g.iter().chain(d.a.iter().flatten()).map(|m| m.norm()).sum::<f64>();
        (rate, scale)
    }

    #[test]
    fn rhs_conserves_trace_and_energy() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for w in [WSpec::Newton, WSpec::Gaussian { strength: 0.3, width: 1.5 }] {
            let sys = system(1.3, 2, w);
            for hfb in [false, true] {
                let st = random_state(&sys, 4, hfb, &mut rng).unwrap();
                let blocks = assemble(&sys, &st).unwrap();
                let d = rhs(&sys, &st, &blocks).unwrap();
                let tr: f64 = d.g.iter().enumerate().map(|(l, m)| (2 * l + 1) as f64 * m.trace().re).sum();
                assert!(tr.abs() < 1e-12, "trace rate {tr}");
                for m in &d.g {
                    assert!(m.hermitian_defect() < 1e-12);
                }
                for m in d.a.iter().flatten() {
                    assert!(m.antisymmetry_defect() < 1e-12);
                }
                let (rate, scale) = energy_rate(&sys, &st, &d);
                assert!(rate.abs() < 1e-9 * scale.max(1.0), "hfb={hfb} energy rate {rate} scale {scale}");
            }
        }
    }

    #[test]
    fn zero_pairing_reduces_to_hf() {
        let sys = system(1.0, 1, WSpec::Newton);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let hf = random_state(&sys, 3, false, &mut rng).unwrap();
        let hfb = hf.to_hfb();
        let d1 = eval(&sys, &hf).unwrap();
        let d2 = eval(&sys, &hfb).unwrap();
        for (x, y) in d1.g.iter().zip(&d2.g) {
            assert_eq!(x, y);
        }
        assert!(d2.a.unwrap().iter().all(|m| m.max_abs() == 0.0));
    }

    #[test]
    fn free_spectral_projector_is_stationary() {
        let sys = system(0.0, 0, WSpec::Newton);
        let k = sys.kinetics.get(0);
        let p = k.function(|x| if x < k.eigenvalues[2] + 1e-9 { 1.0 } else { 0.0 });
        let st = State::hf(sys.grid.clone(), vec![CMat::from_real(p)]).unwrap();
        let d = eval(&sys, &st).unwrap();
        assert!(d.g[0].max_abs() < 1e-12);
    }

    #[test]
    fn stale_blocks_are_rejected() {
        let sys = system(1.0, 1, WSpec::Newton);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let st = random_state(&sys, 2, false, &mut rng).unwrap();
        let blocks = assemble(&sys, &st).unwrap();
        let d = rhs(&sys, &st, &blocks).unwrap();
        let moved = st.axpy(1e-3, &d);
        assert!(matches!(rhs(&sys, &moved, &blocks), Err(Error::StaleBlocks { .. })));
    }

    #[test]
    fn hf_guard_sector_stays_empty() {
        let sys = system(1.0, 2, WSpec::Newton);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut st = random_state(&sys, 3, false, &mut rng).unwrap();
        st.g[2] = CMat::zeros(sys.n());
        let mut s = st.clone();
        for _ in 0..20 {
            s = rk4_step(&sys, &s, 0.02).unwrap();
        }
        assert!(s.g[2].max_abs() <= 1e-12);
    }

    #[test]
    fn free_flow_conserves_energy() {
        let sys = system(0.0, 1, WSpec::Newton);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let st = random_state(&sys, 3, true, &mut rng).unwrap();
        let cfg = IntegratorConfig { t_final: 1.0, record_virial_rate: false, ..Default::default() };
        let tr = integrate(&sys, &st, &cfg).unwrap();
        assert!(tr.breakdown.is_none(), "{:?}", tr.breakdown);
        let drift = tr.max_relative_drift(|s| s.energy);
        assert!(drift <= 1e-9, "drift {drift} steps {} rejected {}", tr.accepted_steps, tr.rejected_steps);
        assert!(tr.max_relative_drift(|s| s.moments.trace) <= 1e-9);
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,dt,energy,trace"));
        assert_eq!(text.lines().count(), tr.samples.len() + 1);
    }

    #[test]
    fn projection_clamps_small_defects_only() {
        let sys = system(1.0, 0, WSpec::Newton);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mut st = random_state(&sys, 2, true, &mut rng).unwrap();
        st.g[0].add_diagonal(&vec![-1e-8; sys.n()]);
        let d = project(&mut st, 1e-13, 1e-6);
        assert!(d > 0.0 && d < 1e-6);
        assert!(check_constraints(&st).holds(1e-12));
        st.g[0].add_diagonal(&vec![-1e-3; sys.n()]);
        assert!(project(&mut st, 1e-13, 1e-6) > 1e-6);
    }
}
