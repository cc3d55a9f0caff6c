//! Mean-field blocks: H_l = K_l + κ (V*ρ) - κ X_l and the pairing field Π_l.

use crate::error::Result;
use crate::kernels::direct_potential;
use crate::linalg::CMat;
use crate::state::State;
use crate::system::System;

#[derive(Clone, Debug)]
pub struct MeanFieldBlocks {
    /// Fingerprint of the state the blocks were assembled from.
    pub stamp: u64,
    /// (V * ρ)(r_i).
    pub v_rho: Vec<f64>,
    pub h: Vec<CMat>,
    pub pi: Option<Vec<CMat>>,
}

pub fn density(state: &State) -> Vec<f64> {
    state.density()
}

/// X_l = Σ_{l', m} (2l'+1)(2m+1)/(8π) G(l, l', m) F_{m,0} ∘ g_l', the sector block of V(x-y) γ(x,y).
pub fn exchange_block(sys: &System, l: usize, g: &[CMat]) -> CMat {
    let n = sys.n();
    let mut x = CMat::zeros(n);
    for (lp, gl) in g.iter().enumerate() {
        x.add_hadamard_scaled(1.0, sys.kernels.exchange_weight(l, lp), gl);
    }
    x
}

/// Π_l = κ [V α]_l.
pub fn pairing_block(sys: &System, l: usize, a: &[CMat]) -> CMat {
    exchange_block(sys, l, a).scale(sys.potential.coupling)
}

/// G_l = -i (Π_l a_l^* - a_l Π_l^*), so that dγ/dt = -i[H, γ] + G.
pub fn g_alpha_term(pi: &CMat, a: &CMat) -> CMat {
    let y = pi.mul(&a.adjoint());
    (&y - &y.adjoint()).mul_neg_i()
}

pub fn assemble(sys: &System, state: &State) -> Result<MeanFieldBlocks> {
    state.check_system(sys)?;
    let kappa = sys.potential.coupling;
    let rho = state.density();
    let v_rho = direct_potential(&rho, &sys.grid, &sys.kernels)?;
    let diag: Vec<f64> = v_rho.iter().map(|v| kappa * v).collect();
    let mut h = Vec::with_capacity(state.g.len());
    for l in 0..state.g.len() {
        let mut hl = exchange_block(sys, l, &state.g).scale(-kappa);
        hl.re += &sys.kinetics.get(l).matrix;
        hl.add_diagonal(&diag);
        h.push(hl);
    }
    let pi = state
        .a
        .as_ref()
        .map(|a| (0..a.len()).map(|l| pairing_block(sys, l, a)).collect());
    Ok(MeanFieldBlocks { stamp: state.fingerprint(), v_rho, h, pi })
}
