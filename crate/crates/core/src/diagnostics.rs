//! Virial observables, the virial inequalities and blow-up diagnostics.

use crate::dynamics::{rhs, Trajectory};
use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::meanfield::assemble;
use crate::radial::{KineticSet, RadialGrid};
use crate::state::{Energy, State};
use crate::system::System;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// h_m = r (m g_{m-1} + (m+1) g_{m+1}) r / (2m+1): the sector-m block of Σ_i x_i γ x_i.
fn position_sandwich(grid: &RadialGrid, g: &[CMat], m: usize) -> CMat {
    let n = grid.len();
    let mut acc = CMat::zeros(n);
    if m >= 1 && m - 1 < g.len() {
        acc.axpy(m as f64, &g[m - 1]);
    }
    if m + 1 < g.len() {
        acc.axpy((m + 1) as f64, &g[m + 1]);
    }
    let r = &grid.points;
    let scale = DMatrix::from_fn(n, n, |i, j| r[i] * r[j] / (2 * m + 1) as f64);
    acc.hadamard_real(&scale)
}

/// Tr M γ with M = Σ_i x_i K x_i; needs kinetic operators up to sector Λ+1.
pub fn virial_m(sys: &System, state: &State) -> Result<f64> {
    virial_m_with(&sys.grid, &sys.kinetics, &state.g)
}

pub fn virial_m_with(grid: &RadialGrid, kinetics: &KineticSet, g: &[CMat]) -> Result<f64> {
    let lmax = g.len();
    if kinetics.lmax() < lmax {
        return Err(Error::CutoffMismatch { expected: lmax, found: kinetics.lmax() });
    }
    let mut acc = 0.0;
    for m in 0..=lmax {
        let h = position_sandwich(grid, g, m);
        acc += (2 * m + 1) as f64 * kinetics.get(m).matrix.dot(&h.re);
    }
    Ok(acc)
}

/// Tr A γ with A = -i(2 r ∂_r + 3).
pub fn virial_a(sys: &System, state: &State) -> Result<f64> {
    Ok(state
        .g
        .iter()
        .enumerate()
        .map(|(l, g)| (2 * l + 1) as f64 * sys.dilation.matrix.trace_product(g).re)
        .sum())
}

/// d/dt Tr M γ along the flow, from the exact right-hand side.
pub fn virial_m_rate(sys: &System, state: &State) -> Result<f64> {
    let blocks = assemble(sys, state)?;
    let d = rhs(sys, state, &blocks)?;
    virial_m_with(&sys.grid, &sys.kinetics, &d.g)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

/// One named check in a diagnostics report.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub status: Status,
    /// Signed distance to failure; positive means satisfied.
    pub margin: f64,
    pub tolerance: f64,
    pub samples: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl CheckReport {
    pub fn new(name: &str, pass: bool, margin: f64, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            status: if pass { Status::Pass } else { Status::Fail },
            margin,
            tolerance,
            samples: Vec::new(),
            detail: String::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    pub fn with_detail(mut self, d: impl Into<String>) -> Self {
        self.detail = d.into();
        self
    }
}

/// Upper bound for d/dt Tr Aγ: 2E + κ sup(w + r w')_- ((Tr γ)² [+ Tr γ]).
pub fn virial_bound(sys: &System, energy: f64, trace: f64, hfb: bool) -> f64 {
    let q = if hfb { trace * trace + trace } else { trace * trace };
    2.0 * energy + sys.potential.coupling * sys.potential.sups.neg * q
}

/// Centered differences of Tr Aγ at interior samples with Richardson error estimates.
///
/// Returns (t, derivative, error estimate) for samples with two neighbours on each side.
pub fn virial_a_rates(traj: &Trajectory) -> Vec<(f64, f64, f64)> {
    let s = &traj.samples;
    let mut out = Vec::new();
    for i in 2..s.len().saturating_sub(2) {
        let h1 = s[i + 1].t - s[i].t;
        let h0 = s[i].t - s[i - 1].t;
        let h2 = s[i + 2].t - s[i].t;
        let hm = s[i].t - s[i - 2].t;
        if (h1 - h0).abs() > 1e-9 * h1 || (h2 - hm).abs() > 1e-9 * h2 {
            continue;
        }
        let a = |k: usize| s[k].moments.virial_a;
        let d1 = (a(i + 1) - a(i - 1)) / (2.0 * h1);
        let d2 = (a(i + 2) - a(i - 2)) / (2.0 * h2);
        let rich = (4.0 * d1 - d2) / 3.0;
        let err = (d1 - d2).abs() / 3.0 + 1e-12 * a(i).abs().max(1.0) / h1;
        out.push((s[i].t, rich, err));
    }
    out
}

/// d/dt Tr Aγ ≤ 2E + κ sup_neg (...), within `slack` times the finite-difference error.
pub fn step2_inequality(sys: &System, traj: &Trajectory, slack: f64) -> CheckReport {
    let e0 = traj.samples[0].energy;
    let n0 = traj.samples[0].moments.trace;
    let bound = virial_bound(sys, e0, n0, traj.hfb);
    let rates = virial_a_rates(traj);
    let mut margin = f64::INFINITY;
    let mut ok = !rates.is_empty();
    let mut samples = Vec::new();
    for &(t, d, err) in &rates {
        let m = bound + slack * err - d;
        margin = margin.min(m);
        ok &= m >= 0.0;
        samples.push([t, d]);
    }
    let mut rep = CheckReport::new("virial-inequality", ok, margin, slack);
    rep.samples = samples;
    rep.detail = format!("bound {bound:.6e} from E0 = {e0:.6e}, Tr gamma = {n0:.6e}");
    rep
}

/// Quadratic envelope a t² + b t + c for Tr Mγ.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Envelope {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// Fitted constant in b = Tr Aγ_0 + C Tr γ Tr (1 + L²) γ.
    pub fitted_constant: f64,
}

impl Envelope {
    pub fn at(&self, t: f64) -> f64 {
        (self.a * t + self.b) * t + self.c
    }

    /// Positive root of the envelope, the predicted blow-up time bound.
    pub fn zero_time(&self) -> Option<f64> {
        if self.a >= 0.0 {
            return None;
        }
        let disc = self.b * self.b - 4.0 * self.a * self.c;
        if disc < 0.0 {
            return None;
        }
        Some((-self.b - disc.sqrt()) / (2.0 * self.a))
    }
}

/// Fit the envelope from the first `fit_samples` samples and check it on the rest.
///
/// a = E_0 + (κ/2) sup_neg ((Tr γ)² [+ Tr γ]), c = Tr Mγ_0, and the unknown constant in b is the
/// largest |d/dt Tr M - Tr A| / (Tr γ Tr (1+L²)γ) seen on the fitted samples, times `safety`.
pub fn envelope_check(sys: &System, traj: &Trajectory, fit_samples: usize, safety: f64) -> (Envelope, CheckReport) {
    let s = &traj.samples;
    let first = &s[0];
    let n0 = first.moments.trace;
    let a = 0.5 * virial_bound(sys, first.energy, n0, traj.hfb);
    let scale = |k: usize| s[k].moments.trace * (s[k].moments.trace + s[k].moments.l2);
    let mut cfit: f64 = 0.0;
    for k in 0..fit_samples.min(s.len()) {
        if let Some(rate) = s[k].virial_m_rate {
            cfit = cfit.max((rate - s[k].moments.virial_a).abs() / scale(k));
        }
    }
    let cfit = cfit * safety;
    let env = Envelope {
        a,
        b: first.moments.virial_a + cfit * scale(0),
        c: first.moments.virial_m,
        fitted_constant: cfit,
    };
    let mut margin = f64::INFINITY;
    let mut samples = Vec::new();
    for smp in s {
        let m = env.at(smp.t) - smp.moments.virial_m;
        margin = margin.min(m / env.c.abs().max(1.0));
        samples.push([smp.t, smp.moments.virial_m]);
    }
    let mut rep = CheckReport::new("virial-envelope", margin >= -1e-9, margin, 1e-9);
    rep.samples = samples;
    rep.detail = format!("a = {:.6e}, b = {:.6e}, c = {:.6e}, C = {:.4e}", env.a, env.b, env.c, cfit);
    (env, rep)
}

/// Smallest constant in the linear envelope term that keeps every sample of `traj` under the envelope.
pub fn envelope_constant_needed(traj: &Trajectory, env: &Envelope) -> f64 {
    let s = &traj.samples;
    let scale = s[0].moments.trace * (s[0].moments.trace + s[0].moments.l2);
    s.iter()
        .skip(1)
        .map(|x| {
            let t = x.t;
            (x.moments.virial_m - (env.a * t * t + s[0].moments.virial_a * t + env.c)) / (t * scale)
        })
        .fold(env.fitted_constant, f64::max)
}

/// Analytic d/dt and d²/dt² of Tr |L|²γ for an HFB state.
///
/// The first derivative is Σ l(l+1)(2l+1) Tr G_l and the second is its derivative along
/// the flow, evaluated from the right-hand side at the perturbed state.
pub fn l2_moment_derivatives(sys: &System, state: &State) -> Result<(f64, f64)> {
    let first = |st: &State| -> Result<f64> {
        let blocks = assemble(sys, st)?;
        let d = rhs(sys, st, &blocks)?;
        Ok(d
            .g
            .iter()
            .enumerate()
            .map(|(l, dg)| ((l * (l + 1)) as f64) * (2 * l + 1) as f64 * dg.re.trace())
            .sum())
    };
    let blocks = assemble(sys, state)?;
    let d = rhs(sys, state, &blocks)?;
    let d1 = first(state)?;
    // Derivative of the first derivative along the flow by a symmetric difference in state space.
    let scale = state.g.iter().map(|g| g.max_abs()).fold(0.0, f64::max).max(1e-300);
    let dscale = d.g.iter().chain(d.a.iter().flatten()).map(|g| g.max_abs()).fold(0.0, f64::max).max(1e-300);
    let h = 1e-4 * scale / dscale;
    let plus = first(&state.axpy(h, &d))?;
    let minus = first(&state.axpy(-h, &d))?;
    let plus2 = first(&state.axpy(2.0 * h, &d))?;
    let minus2 = first(&state.axpy(-2.0 * h, &d))?;
    let d2 = (8.0 * (plus - minus) - (plus2 - minus2)) / (12.0 * h);
    Ok((d1, d2))
}

/// κ² ⟨Vα₀, (L_x² + L_y²) Vα₀⟩ for α₀ supported in sector 0 and γ₀ in sector 0.
///
/// Equals 2κ² Σ_{1<=l<=Λ} l(l+1)(2l+1) ‖[Vα₀]_l‖²_F; the l = 0 component carries no |L|².
pub fn l2_second_derivative_formula(sys: &System, state: &State) -> Result<f64> {
    let a = state.a.as_ref().ok_or_else(|| Error::InvalidParameter("state has no pairing".into()))?;
    let kappa = sys.potential.coupling;
    let mut acc = 0.0;
    for l in 1..=state.lambda() {
        let va = crate::meanfield::exchange_block(sys, l, a);
        acc += ((l * (l + 1)) as f64) * (2 * l + 1) as f64 * va.norm_sq();
    }
    Ok(2.0 * kappa * kappa * acc)
}

/// ‖(K_l - K_l') r‖ for l, l' <= lmax and the fitted constant of the gap bound.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KlScan {
    pub norms: Vec<(usize, usize, f64)>,
    /// max ‖(K_l - K_l') r‖ / ((1 + l + l') |l - l'|).
    pub fitted_constant: f64,
}

pub fn kl_difference_scan(grid: &RadialGrid, kinetics: &KineticSet, lmax: usize) -> Result<KlScan> {
    if kinetics.lmax() < lmax {
        return Err(Error::CutoffMismatch { expected: lmax, found: kinetics.lmax() });
    }
    let n = grid.len();
    let r = DMatrix::from_fn(n, n, |i, j| if i == j { grid.points[i] } else { 0.0 });
    let mut norms = Vec::new();
    let mut c: f64 = 0.0;
    for l in 0..=lmax {
        for lp in (l + 1)..=lmax {
            let d = (&kinetics.get(l).matrix - &kinetics.get(lp).matrix) * &r;
            let nrm = CMat::from_real(d).spectral_norm();
            c = c.max(nrm / ((1 + l + lp) * (lp - l)) as f64);
            norms.push((l, lp, nrm));
        }
    }
    Ok(KlScan { norms, fitted_constant: c })
}

/// ‖∂_r K_l^{-1}‖ on the grid, bounded by 1 for every l.
///
/// Uses ∂_r*∂_r = K_0² - m², so ‖∂_r K_l^{-1}‖² = ‖K_l^{-1} (K_0² - m²) K_l^{-1}‖. Applying a
/// differentiation matrix directly would amplify the unresolved top of the grid spectrum.
pub fn radial_derivative_inverse_norm(kinetics: &KineticSet, l: usize) -> f64 {
    let kl = kinetics.get(l);
    let mut g = kinetics.get(0).squared.clone();
    for i in 0..g.nrows() {
        g[(i, i)] -= kl.mass * kl.mass;
    }
    let inv = kl.inverse();
    CMat::from_real(&inv * g * &inv).spectral_norm().sqrt()
}

/// Relative change of the total energy.
pub fn energy_drift(e0: &Energy, e: &Energy) -> f64 {
    (e.total - e0.total).abs() / e0.total.abs().max(e0.kinetic.abs()).max(1e-300)
}
