//! Initial data: Gaussian shells and thermal-like states, optional pairing and a phase chirp,
//! with the coupling raised until the energy lies below the blow-up threshold.

use crate::error::{Error, Result};
use crate::linalg::{symmetric_function, CMat};
use crate::state::{check_constraints, energy, State};
use crate::system::System;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Shell {
    pub ell: usize,
    pub center: f64,
    pub width: f64,
    pub occupation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Family {
    GaussianShells { shells: Vec<Shell> },
    /// g_l = (1 + exp((K_l + ω² r²/2 - μ)/T))^{-1}.
    ThermalLike { temperature: f64, chemical_potential: f64, omega: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Target {
    NegativeEnergyHf,
    NegativeEnergyHfb,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairingSpec {
    /// Fraction of the largest admissible pairing amplitude, in [0, 1].
    pub amplitude: f64,
    #[serde(default = "default_pair_sectors")]
    pub sectors: Vec<usize>,
}

fn default_pair_sectors() -> Vec<usize> {
    vec![0]
}

/// Unknown keys are rejected by the flattened `Family`, which sees every key not listed here.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialSpec {
    #[serde(flatten)]
    pub family: Family,
    #[serde(default)]
    pub pairing: Option<PairingSpec>,
    /// Phase e^{iθ r²} applied to every orbital.
    #[serde(default)]
    pub chirp: f64,
    #[serde(default)]
    pub target: Option<Target>,
    #[serde(default = "default_kappa_max")]
    pub kappa_max: f64,
}

fn default_kappa_max() -> f64 {
    1e3
}

#[derive(Clone, Debug)]
pub struct InitialData {
    pub state: State,
    /// Coupling the state was prepared for; differs from the system's when a target was set.
    pub coupling: f64,
    pub energy: f64,
    /// -(κ/2) sup_neg ((Tr γ)² [+ Tr γ]).
    pub threshold: f64,
}

/// Threshold energy below which the virial argument forces blow-up.
pub fn blowup_threshold(sys: &System, trace: f64, hfb: bool) -> f64 {
    let q = if hfb { trace * trace + trace } else { trace * trace };
    -0.5 * sys.potential.coupling * sys.potential.sups.neg * q
}

/// Normalized symmetric-basis vector of r^l exp(-(r - c)²/(2 s²)).
pub fn shell_orbital(sys: &System, ell: usize, center: f64, width: f64) -> DVector<f64> {
    let v = sys.grid.function_vector(|r| r.powi(ell as i32) * (-(r - center).powi(2) / (2.0 * width * width)).exp());
    let s = sys.grid.sqrt_weights();
    let v = DVector::from_iterator(v.len(), v.iter().zip(&s).map(|(f, w)| f * w));
    let n = v.norm();
    v / n
}

/// Löwdin orthonormalization of the columns of `u`.
pub fn lowdin(u: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let s = u.transpose() * u;
    let min = s.clone().symmetric_eigenvalues().min();
    if !(min > 1e-10 * s.norm()) {
        return Err(Error::InvalidParameter("orbitals are linearly dependent".into()));
    }
    Ok(u * symmetric_function(&s, |x| 1.0 / x.sqrt()))
}

fn pair_block(u0: &DVector<f64>, u1: &DVector<f64>, amp: f64) -> DMatrix<f64> {
    (u0 * u1.transpose() - u1 * u0.transpose()) * amp
}

fn chirp(state: &mut State, theta: f64) {
    if theta == 0.0 {
        return;
    }
    let n = state.grid.len();
    let mut u = CMat::zeros(n);
    for (i, r) in state.grid.points.iter().enumerate() {
        let ph = theta * r * r;
        u.re[(i, i)] = ph.cos();
        u.im[(i, i)] = ph.sin();
    }
    let ud = u.adjoint();
    let ut = u.transpose();
    for g in state.g.iter_mut() {
        *g = u.mul(g).mul(&ud);
    }
    if let Some(a) = state.a.as_mut() {
        for x in a.iter_mut() {
            *x = u.mul(x).mul(&ut);
        }
    }
}

fn build_state(sys: &System, spec: &InitialSpec) -> Result<State> {
    let n = sys.n();
    let lambda = sys.lambda;
    let mut g = vec![DMatrix::<f64>::zeros(n, n); lambda + 1];
    // Per sector: orthonormal orbitals with their occupations, in descending occupation.
    let mut orbitals: Vec<Vec<(DVector<f64>, f64)>> = vec![Vec::new(); lambda + 1];
    match &spec.family {
        Family::GaussianShells { shells } => {
            if shells.is_empty() {
                return Err(Error::InvalidParameter("gaussian-shells needs at least one shell".into()));
            }
            for (ell, list) in orbitals.iter_mut().enumerate() {
                let mine: Vec<&Shell> = shells.iter().filter(|s| s.ell == ell).collect();
                if mine.is_empty() {
                    continue;
                }
                for s in &mine {
                    if !(s.width > 0.0 && s.center >= 0.0 && (0.0..=1.0).contains(&s.occupation)) {
                        return Err(Error::InvalidParameter(format!("invalid shell {s:?}")));
                    }
                }
                let cols: Vec<DVector<f64>> = mine.iter().map(|s| shell_orbital(sys, ell, s.center, s.width)).collect();
                let u = lowdin(&DMatrix::from_columns(&cols))?;
                for (k, s) in mine.iter().enumerate() {
                    list.push((u.column(k).into_owned(), s.occupation));
                }
            }
            if let Some(s) = shells.iter().find(|s| s.ell > lambda) {
                return Err(Error::CutoffMismatch { expected: lambda, found: s.ell });
            }
        }
        Family::ThermalLike { temperature, chemical_potential, omega } => {
            if !(*temperature > 0.0) {
                return Err(Error::InvalidParameter("thermal-like needs temperature > 0".into()));
            }
            let r2: Vec<f64> = sys.grid.points.iter().map(|r| 0.5 * omega * omega * r * r).collect();
            for (ell, list) in orbitals.iter_mut().enumerate() {
                let mut h = sys.kinetics.get(ell).matrix.clone();
                for i in 0..n {
                    h[(i, i)] += r2[i];
                }
                let e = h.symmetric_eigen();
                for k in 0..n {
                    let occ = 1.0 / (1.0 + ((e.eigenvalues[k] - chemical_potential) / temperature).exp());
                    if occ > 1e-14 {
                        list.push((e.eigenvectors.column(k).into_owned(), occ));
                    }
                }
            }
        }
    }
    for list in orbitals.iter_mut() {
        list.sort_by(|a, b| b.1.total_cmp(&a.1));
    }
    for (ell, list) in orbitals.iter().enumerate() {
        for (u, occ) in list {
            g[ell] += u * u.transpose() * *occ;
        }
    }
    let g: Vec<CMat> = g.into_iter().map(CMat::from_real).collect();
    let mut state = match &spec.pairing {
        None => State::hf(sys.grid.clone(), g)?,
        Some(p) => {
            if !(0.0..=1.0).contains(&p.amplitude) {
                return Err(Error::InvalidParameter(format!("pairing amplitude {} outside [0, 1]", p.amplitude)));
            }
            let mut a = vec![DMatrix::<f64>::zeros(n, n); lambda + 1];
            for &ell in &p.sectors {
                if ell > lambda {
                    return Err(Error::CutoffMismatch { expected: lambda, found: ell });
                }
                let list = &orbitals[ell];
                // Pair orbitals (0,1), (2,3), ... that share an occupation.
                for pair in list.chunks_exact(2) {
                    let (u0, n0) = &pair[0];
                    let (u1, n1) = &pair[1];
                    let nu = n0.min(*n1);
                    let amp = p.amplitude * (nu * (1.0 - n0.max(*n1))).max(0.0).sqrt();
                    a[ell] += pair_block(u0, u1, amp);
                }
            }
            State::hfb(sys.grid.clone(), g, a.into_iter().map(CMat::from_real).collect())?
        }
    };
    chirp(&mut state, spec.chirp);
    Ok(state)
}

/// Build a spherically symmetric initial state; with a target, raise κ by 10% past the
/// threshold coupling.
pub fn make_initial_data(sys: &System, spec: &InitialSpec) -> Result<InitialData> {
    let state = build_state(sys, spec)?;
    let rep = check_constraints(&state);
    if !rep.holds(1e-9) {
        return Err(Error::Constraint(format!("initial state violates constraints by {:.3e}", rep.worst())));
    }
    let mut kappa = sys.potential.coupling;
    if let Some(target) = spec.target {
        let hfb = target == Target::NegativeEnergyHfb;
        if hfb && !state.is_hfb() {
            return Err(Error::InvalidParameter("HFB target needs pairing data".into()));
        }
        let e = energy(sys, &state)?;
        if kappa == 0.0 {
            return Err(Error::TargetUnreachable(format!(
                "coupling is zero; energy {:.6e} is the kinetic energy and cannot be lowered",
                e.total
            )));
        }
        let t = e.kinetic;
        let u1 = (e.total - t) / kappa;
        let tr = state.trace();
        let q = if hfb { tr * tr + tr } else { tr * tr };
        let d = -(u1 + 0.5 * sys.potential.sups.neg * q);
        if !(d > 0.0) {
            return Err(Error::TargetUnreachable(format!(
                "interaction energy per unit coupling {u1:.6e} does not beat the threshold slope; energy {:.6e}",
                e.total
            )));
        }
        let kc = t / d;
        kappa = kappa.max(1.1 * kc);
        if kappa > spec.kappa_max {
            return Err(Error::TargetUnreachable(format!(
                "needs coupling {kappa:.6e} above kappa_max {:.6e}; energy at current coupling {:.6e}",
                spec.kappa_max, e.total
            )));
        }
    }
    let sys2 = sys.with_coupling(kappa)?;
    let e = energy(&sys2, &state)?.total;
    let threshold = blowup_threshold(&sys2, state.trace(), state.is_hfb());
    if spec.target.is_some() && !(e < threshold) {
        return Err(Error::TargetUnreachable(format!("energy {e:.6e} not below threshold {threshold:.6e}")));
    }
    Ok(InitialData { state, coupling: kappa, energy: e, threshold })
}

/// Random smooth state for tests: rank `rank` per sector, orbitals r^l e^{-r²/(2s²)} (1 + c r²)
/// with random widths and complex mixing, random occupations, optional pairing.
pub fn random_state<R: Rng>(sys: &System, rank: usize, hfb: bool, rng: &mut R) -> Result<State> {
    let scale = sys.grid.radius() / 6.0;
    random_state_with_width(sys, rank, hfb, 0.6 * scale..1.2 * scale, rng)
}

/// As `random_state` with orbital widths drawn from `widths`.
pub fn random_state_with_width<R: Rng>(
    sys: &System,
    rank: usize,
    hfb: bool,
    widths: std::ops::Range<f64>,
    rng: &mut R,
) -> Result<State> {
    random_state_with_ranks(sys, &vec![rank; sys.lambda + 1], hfb, widths, rng)
}

/// As `random_state_with_width` with a separate rank per sector.
pub fn random_state_with_ranks<R: Rng>(
    sys: &System,
    ranks: &[usize],
    hfb: bool,
    widths: std::ops::Range<f64>,
    rng: &mut R,
) -> Result<State> {
    if ranks.len() != sys.lambda + 1 || ranks.iter().any(|&k| k == 0) {
        return Err(Error::InvalidParameter(format!(
            "need a positive rank for each of the {} sectors",
            sys.lambda + 1
        )));
    }
    let scale = widths.end;
    let n = sys.n();
    let grid = sys.grid.clone();
    let mut g = Vec::new();
    let mut a = Vec::new();
    for (ell, &rank) in ranks.iter().enumerate() {
        let mut cols = Vec::new();
        for _ in 0..rank {
            let s = rng.gen_range(widths.clone());
            let c = rng.gen_range(-0.05..0.05) / (s * s);
            let f = grid.function_vector(|r| r.powi(ell as i32) * (-r * r / (2.0 * s * s)).exp() * (1.0 + c * r * r));
            cols.push(DVector::from_vec(f));
        }
        let u = lowdin(&DMatrix::from_columns(&cols))?;
        // Random unitary mixing of the real orbitals gives complex sector kernels.
        let mut z = CMat::zeros(rank);
        for i in 0..rank {
            for j in 0..rank {
                z.re[(i, j)] = rng.gen_range(-1.0..1.0);
                z.im[(i, j)] = rng.gen_range(-1.0..1.0);
            }
        }
        let (_, q) = (&z + &z.adjoint()).hermitian_eigen();
        let uc = CMat::from_real(u).mul(&q);
        let occ: Vec<f64> = (0..rank).map(|_| rng.gen_range(0.2..0.8)).collect();
        let d = CMat::from_diagonal(&occ);
        g.push(uc.mul(&d).mul(&uc.adjoint()));
        if hfb {
            let mut al = CMat::zeros(n);
            for k in (0..rank.saturating_sub(1)).step_by(2) {
                let nu = occ[k].min(occ[k + 1]);
                let big = occ[k].max(occ[k + 1]);
                let amp = rng.gen_range(0.3..0.9) * (nu * (1.0 - big)).sqrt();
                let u0 = column(&uc, k);
                let u1 = column(&uc, k + 1);
                let blk = &outer(&u0, &u1) - &outer(&u1, &u0);
                al.axpy(amp, &blk);
            }
            a.push(al);
        }
    }
    let mut st = if hfb { State::hfb(grid, g, a)? } else { State::hf(grid, g)? };
    chirp(&mut st, rng.gen_range(-0.05..0.05) / (scale * scale));
    Ok(st)
}

fn column(m: &CMat, k: usize) -> CMat {
    let n = m.nrows();
    CMat::from_parts(
        DMatrix::from_fn(n, 1, |i, _| m.re[(i, k)]),
        DMatrix::from_fn(n, 1, |i, _| m.im[(i, k)]),
    )
}

/// x yᵀ (no conjugation).
fn outer(x: &CMat, y: &CMat) -> CMat {
    let re = &x.re * y.re.transpose() - &x.im * y.im.transpose();
    let im = &x.re * y.im.transpose() + &x.im * y.re.transpose();
    CMat::from_parts(re, im)
}

/// Rank-1 sector-0 state ν |u><u| for a normalized orbital.
pub fn single_orbital(sys: &System, ell: usize, center: f64, width: f64, occupation: f64) -> Result<State> {
    let u = shell_orbital(sys, ell, center, width);
    let mut g = vec![CMat::zeros(sys.n()); sys.lambda + 1];
    if ell > sys.lambda {
        return Err(Error::CutoffMismatch { expected: sys.lambda, found: ell });
    }
    g[ell] = CMat::from_real(&u * u.transpose() * occupation);
    State::hf(Arc::clone(&sys.grid), g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::PotentialSpec;
    use crate::radial::{build_grid, GridScheme};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sys(kappa: f64, lambda: usize) -> System {
        let grid = Arc::new(build_grid(40, 12.0, GridScheme::Uniform).unwrap());
        System::new(grid, PotentialSpec::newton(kappa, 0.5, 24.0).unwrap(), lambda).unwrap()
    }

    fn shells(pairing: bool) -> InitialSpec {
        InitialSpec {
            family: Family::GaussianShells {
                shells: vec![
                    Shell { ell: 0, center: 0.0, width: 1.5, occupation: 0.9 },
                    Shell { ell: 0, center: 2.0, width: 1.5, occupation: 0.9 },
                    Shell { ell: 1, center: 1.0, width: 1.5, occupation: 0.5 },
                ],
            },
            pairing: pairing.then(|| PairingSpec { amplitude: 0.8, sectors: vec![0] }),
            chirp: 0.0,
            target: None,
            kappa_max: 1e3,
        }
    }

    #[test]
    fn shells_satisfy_constraints() {
        let s = sys(1.0, 1);
        for p in [false, true] {
            let d = make_initial_data(&s, &shells(p)).unwrap();
            assert!(check_constraints(&d.state).holds(1e-10));
            assert!((d.state.trace() - (0.9 + 0.9 + 3.0 * 0.5)).abs() < 1e-10);
            assert_eq!(d.state.is_hfb(), p);
        }
    }

    #[test]
    fn zero_coupling_target_is_unreachable() {
        let s = sys(0.0, 1);
        let mut spec = shells(false);
        spec.target = Some(Target::NegativeEnergyHf);
        let e = make_initial_data(&s, &spec).unwrap_err();
        assert!(matches!(e, Error::TargetUnreachable(_)));
        let s = sys(0.1, 1);
        let d = make_initial_data(&s, &spec).unwrap();
        assert!(d.energy < d.threshold && d.energy < 0.0);
        assert!(check_constraints(&d.state).holds(1e-10));
    }

    #[test]
    fn random_states_are_admissible() {
        let s = sys(1.0, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..3 {
            let st = random_state(&s, 4, true, &mut rng).unwrap();
            let rep = check_constraints(&st);
            assert!(rep.holds(1e-10), "{rep:?}");
            assert!(st.pairing_mass() > 0.0);
            assert!(st.pairing_mass() <= st.trace());
        }
    }
}
