//! Sector-reduced one-body and pairing density matrices.
//!
//! The three-dimensional kernels are
//! γ(x, y) = Σ_l (2l+1)/(4π) g_l(r, r') P_l(ω_x·ω_y) and the same with a_l for α.

use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::radial::RadialGrid;
use crate::system::System;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::hash::Hasher;
use std::sync::Arc;

/// Tr γ = Σ_l (2l+1) TRACE_NORM Tr g_l.
pub const TRACE_NORM: f64 = 1.0;
/// Two-body pair sums: ∬ V |γ|² = Σ (2l+1)(2l'+1) PAIR_NORM ⟨g_l, F_{ll'} ∘ g_l'⟩.
pub const PAIR_NORM: f64 = 1.0 / (4.0 * PI);
/// Lift from sector kernels to γ(x, y).
pub const LIFT_NORM: f64 = 1.0 / (4.0 * PI);

/// Normalization constants in effect, recorded in manifests and checkpoint headers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub trace_norm: f64,
    pub pair_norm: f64,
    pub lift_norm: f64,
    pub exchange_block_norm: f64,
}

impl Constants {
    pub fn current() -> Self {
        Self {
            trace_norm: TRACE_NORM,
            pair_norm: PAIR_NORM,
            lift_norm: LIFT_NORM,
            exchange_block_norm: crate::kernels::EXCHANGE_BLOCK_NORM,
        }
    }
}

#[derive(Clone, Debug)]
pub struct State {
    pub grid: Arc<RadialGrid>,
    /// g_l for l = 0..=Λ in the symmetric basis.
    pub g: Vec<CMat>,
    /// a_l for l = 0..=Λ when the state carries pairing.
    pub a: Option<Vec<CMat>>,
    pub time: f64,
    pub step: u64,
}

impl State {
    pub fn hf(grid: Arc<RadialGrid>, g: Vec<CMat>) -> Result<Self> {
        let s = Self { grid, g, a: None, time: 0.0, step: 0 };
        s.check_shapes()?;
        Ok(s)
    }

    pub fn hfb(grid: Arc<RadialGrid>, g: Vec<CMat>, a: Vec<CMat>) -> Result<Self> {
        if a.len() != g.len() {
            return Err(Error::CutoffMismatch { expected: g.len() - 1, found: a.len().saturating_sub(1) });
        }
        let s = Self { grid, g, a: Some(a), time: 0.0, step: 0 };
        s.check_shapes()?;
        Ok(s)
    }

    /// HFB state with α = 0.
    pub fn to_hfb(&self) -> Self {
        let n = self.grid.len();
        let mut s = self.clone();
        s.a = Some(vec![CMat::zeros(n); self.g.len()]);
        s
    }

    fn check_shapes(&self) -> Result<()> {
        if self.g.is_empty() {
            return Err(Error::InvalidParameter("state needs at least sector 0".into()));
        }
        let n = self.grid.len();
        let all = self.g.iter().chain(self.a.iter().flatten());
        for m in all {
            if m.shape() != (n, n) {
                return Err(Error::GridMismatch(format!("sector block {:?} on grid of {n}", m.shape())));
            }
        }
        Ok(())
    }

    pub fn lambda(&self) -> usize {
        self.g.len() - 1
    }

    pub fn is_hfb(&self) -> bool {
        self.a.is_some()
    }

    pub fn check_system(&self, sys: &System) -> Result<()> {
        if self.grid.id() != sys.grid.id() {
            return Err(Error::GridMismatch("state and system use different grids".into()));
        }
        if self.lambda() != sys.lambda {
            return Err(Error::CutoffMismatch { expected: sys.lambda, found: self.lambda() });
        }
        Ok(())
    }

    /// Hash of the matrix contents, used to detect stale mean-field blocks.
    pub fn fingerprint(&self) -> u64 {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        for m in self.g.iter().chain(self.a.iter().flatten()) {
            for x in m.re.iter().chain(m.im.iter()) {
                h.write_u64(x.to_bits());
            }
        }
        h.finish()
    }

    /// ρ(r_i) = Σ_l (2l+1)/(4π) g_l(r_i, r_i).
    pub fn density(&self) -> Vec<f64> {
        let n = self.grid.len();
        let mut rho = vec![0.0; n];
        for (l, g) in self.g.iter().enumerate() {
            let c = (2 * l + 1) as f64 * LIFT_NORM;
            for (i, r) in rho.iter_mut().enumerate() {
                *r += c * g.re[(i, i)] / self.grid.weights[i];
            }
        }
        rho
    }

    pub fn trace(&self) -> f64 {
        self.g.iter().enumerate().map(|(l, g)| (2 * l + 1) as f64 * TRACE_NORM * g.re.trace()).sum()
    }

    /// Tr |L|^s γ = Σ (2l+1) (l(l+1))^{s/2} Tr g_l.
    pub fn angular_moment(&self, s: f64) -> f64 {
        self.g
            .iter()
            .enumerate()
            .map(|(l, g)| (2 * l + 1) as f64 * ((l * (l + 1)) as f64).powf(s / 2.0) * g.re.trace())
            .sum()
    }

    /// Tr α*α = Σ (2l+1) ‖a_l‖²_F.
    pub fn pairing_mass(&self) -> f64 {
        self.a
            .as_ref()
            .map(|a| a.iter().enumerate().map(|(l, m)| (2 * l + 1) as f64 * m.norm_sq()).sum())
            .unwrap_or(0.0)
    }

    /// Fraction of Tr γ located at r >= 0.95 R.
    pub fn boundary_density(&self) -> f64 {
        let rho = self.density();
        let cut = 0.95 * self.grid.radius();
        let outer: f64 = self
            .grid
            .points
            .iter()
            .zip(&rho)
            .zip(&self.grid.weights)
            .filter(|((r, _), _)| **r >= cut)
            .map(|((_, p), w)| 4.0 * PI * p * w)
            .sum();
        outer / self.trace().abs().max(f64::MIN_POSITIVE)
    }

    /// Σ (2l+1) Tr(O_l g_l) for real symmetric sector operators O_l.
    pub fn sector_expectation(&self, ops: &[&nalgebra::DMatrix<f64>]) -> f64 {
        self.g.iter().enumerate().map(|(l, g)| (2 * l + 1) as f64 * ops[l].dot(&g.re)).sum()
    }

    /// Linear combination self + s * d, sector by sector.
    pub fn axpy(&self, s: f64, d: &Derivative) -> State {
        let mut out = self.clone();
        for (g, dg) in out.g.iter_mut().zip(&d.g) {
            g.axpy(s, dg);
        }
        if let (Some(a), Some(da)) = (out.a.as_mut(), d.a.as_ref()) {
            for (x, dx) in a.iter_mut().zip(da) {
                x.axpy(s, dx);
            }
        }
        out
    }

    /// max-entry distance between two states of the same shape.
    pub fn distance(&self, other: &State) -> f64 {
        let mut d: f64 = 0.0;
        for (x, y) in self.g.iter().zip(&other.g) {
            d = d.max((x - y).max_abs());
        }
        if let (Some(a), Some(b)) = (&self.a, &other.a) {
            for (x, y) in a.iter().zip(b) {
                d = d.max((x - y).max_abs());
            }
        }
        d
    }
}

/// Time derivative of a state, sector by sector.
#[derive(Clone, Debug)]
pub struct Derivative {
    pub g: Vec<CMat>,
    pub a: Option<Vec<CMat>>,
}

impl Derivative {
    pub fn combine(parts: &[(f64, &Derivative)]) -> Derivative {
        let first = parts[0].1;
        let mut g: Vec<CMat> = first.g.iter().map(|m| m.scale(parts[0].0)).collect();
        let mut a: Option<Vec<CMat>> = first.a.as_ref().map(|v| v.iter().map(|m| m.scale(parts[0].0)).collect());
        for (s, d) in &parts[1..] {
            for (x, y) in g.iter_mut().zip(&d.g) {
                x.axpy(*s, y);
            }
            if let (Some(a), Some(da)) = (a.as_mut(), d.a.as_ref()) {
                for (x, y) in a.iter_mut().zip(da) {
                    x.axpy(*s, y);
                }
            }
        }
        Derivative { g, a }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Energy {
    pub kinetic: f64,
    /// (κ/2) ∬ V ρ ρ
    pub direct: f64,
    /// (κ/2) ∬ V |γ|²
    pub exchange: f64,
    /// (κ/2) ∬ V |α|²
    pub pairing: f64,
    pub total: f64,
}

/// Σ_{l,l'} (2l+1)(2l'+1)/(4π) Σ_ij F_{ll'}(i, j) Re(conj(x_l,ij) y_l',ij).
pub fn pair_sum(sys: &System, x: &[CMat], y: &[CMat]) -> f64 {
    let mut acc = 0.0;
    for (l, xl) in x.iter().enumerate() {
        for (lp, yl) in y.iter().enumerate() {
            let f = sys.kernels.pair(l, lp);
            let mut s = 0.0;
            for k in 0..f.len() {
                s += f[k] * (xl.re[k] * yl.re[k] + xl.im[k] * yl.im[k]);
            }
            acc += (2 * l + 1) as f64 * (2 * lp + 1) as f64 * PAIR_NORM * s;
        }
    }
    acc
}

/// ∬ ρ(x) V(x - y) ρ(y) dx dy.
pub fn direct_integral(sys: &System, rho: &[f64], v_rho: &[f64]) -> f64 {
    4.0 * PI * rho.iter().zip(v_rho).zip(&sys.grid.weights).map(|((p, v), w)| p * v * w).sum::<f64>()
}

/// Σ (2l+1) Tr(K_l g_l).
pub fn kinetic_energy(sys: &System, state: &State) -> f64 {
    let ops: Vec<_> = (0..=state.lambda()).map(|l| &sys.kinetics.get(l).matrix).collect();
    state.sector_expectation(&ops)
}

pub fn energy(sys: &System, state: &State) -> Result<Energy> {
    state.check_system(sys)?;
    let kappa = sys.potential.coupling;
    let rho = state.density();
    let v_rho = crate::kernels::direct_potential(&rho, &sys.grid, &sys.kernels)?;
    let kinetic = kinetic_energy(sys, state);
    let direct = 0.5 * kappa * direct_integral(sys, &rho, &v_rho);
    let exchange = 0.5 * kappa * pair_sum(sys, &state.g, &state.g);
    let pairing = match &state.a {
        Some(a) => 0.5 * kappa * pair_sum(sys, a, a),
        None => 0.0,
    };
    Ok(Energy { kinetic, direct, exchange, pairing, total: kinetic + direct - exchange + pairing })
}

pub fn hf_energy(sys: &System, state: &State) -> Result<f64> {
    let hf = State { a: None, ..state.clone() };
    Ok(energy(sys, &hf)?.total)
}

pub fn hfb_energy(sys: &System, state: &State) -> Result<f64> {
    Ok(energy(sys, state)?.total)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub trace: f64,
    pub kinetic: f64,
    /// Tr (-Δ)^{1/2} γ
    pub sqrt_laplacian: f64,
    pub l2: f64,
    pub l3: f64,
    /// Tr |L|^{6+ε} γ
    pub l6eps: f64,
    pub virial_m: f64,
    pub virial_a: f64,
    pub pairing_mass: f64,
    pub boundary_density: f64,
}

pub fn moments(sys: &System, state: &State) -> Result<Moments> {
    state.check_system(sys)?;
    let massless: Vec<_> = (0..=state.lambda()).map(|l| &sys.massless.get(l).matrix).collect();
    Ok(Moments {
        trace: state.trace(),
        kinetic: kinetic_energy(sys, state),
        sqrt_laplacian: state.sector_expectation(&massless),
        l2: state.angular_moment(2.0),
        l3: state.angular_moment(3.0),
        l6eps: state.angular_moment(6.0 + sys.potential.epsilon),
        virial_m: crate::diagnostics::virial_m(sys, state)?,
        virial_a: crate::diagnostics::virial_a(sys, state)?,
        pairing_mass: state.pairing_mass(),
        boundary_density: state.boundary_density(),
    })
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    /// max over sectors of distance of spec(g_l) from [0, 1].
    pub pauli_defect: f64,
    /// max over sectors of the negative part of g - g² - a a*.
    pub bogoliubov_defect: f64,
    pub hermiticity_defect: f64,
    pub antisymmetry_defect: f64,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
}

impl ConstraintReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.pauli_defect <= tol
            && self.bogoliubov_defect <= tol
            && self.hermiticity_defect <= tol
            && self.antisymmetry_defect <= tol
    }

    pub fn worst(&self) -> f64 {
        self.pauli_defect
            .max(self.bogoliubov_defect)
            .max(self.hermiticity_defect)
            .max(self.antisymmetry_defect)
    }
}

pub fn check_constraints(state: &State) -> ConstraintReport {
    let mut rep = ConstraintReport { min_eigenvalue: f64::INFINITY, max_eigenvalue: f64::NEG_INFINITY, ..Default::default() };
    for (l, g) in state.g.iter().enumerate() {
        rep.hermiticity_defect = rep.hermiticity_defect.max(g.hermitian_defect());
        let ev = g.hermitian_eigenvalues();
        let (lo, hi) = (ev[0], ev[ev.len() - 1]);
        rep.min_eigenvalue = rep.min_eigenvalue.min(lo);
        rep.max_eigenvalue = rep.max_eigenvalue.max(hi);
        rep.pauli_defect = rep.pauli_defect.max(-lo).max(hi - 1.0);
        if let Some(a) = &state.a {
            let al = &a[l];
            rep.antisymmetry_defect = rep.antisymmetry_defect.max(al.antisymmetry_defect());
            let gh = g.hermitian_part();
            let mut m = &gh - &gh.mul(&gh);
            m -= &al.mul(&al.adjoint());
            let lo = m.hermitian_eigenvalues()[0];
            rep.bogoliubov_defect = rep.bogoliubov_defect.max(-lo);
        }
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::{build_grid, GridScheme};
    use nalgebra::DMatrix;

    #[test]
    fn trace_and_density_agree() {
        let grid = Arc::new(build_grid(32, 6.0, GridScheme::Uniform).unwrap());
        let f = grid.function_vector(|r| (-r * r).exp());
        let nrm: f64 = f.iter().map(|x| x * x).sum::<f64>().sqrt();
        let v = nalgebra::DVector::from_iterator(32, f.iter().map(|x| x / nrm));
        let g0 = CMat::from_real(&v * v.transpose() * 0.6);
        let g1 = CMat::from_real(&v * v.transpose() * 0.2);
        let s = State::hf(grid.clone(), vec![g0, g1]).unwrap();
        assert!((s.trace() - (0.6 + 3.0 * 0.2)).abs() < 1e-12);
        let rho = s.density();
        let mass: f64 = rho.iter().zip(&grid.weights).map(|(p, w)| 4.0 * PI * p * w).sum();
        assert!((mass - s.trace()).abs() < 1e-12);
        assert!((s.angular_moment(2.0) - 3.0 * 2.0 * 0.2).abs() < 1e-12);
        let rep = check_constraints(&s);
        assert!(rep.holds(1e-12));
        let _ = DMatrix::<f64>::zeros(1, 1);
    }

    #[test]
    fn rejects_mismatched_shapes() {
        let grid = Arc::new(build_grid(8, 1.0, GridScheme::Uniform).unwrap());
        assert!(State::hf(grid.clone(), vec![CMat::zeros(7)]).is_err());
        assert!(State::hfb(grid, vec![CMat::zeros(8)], vec![]).is_err());
    }
}
