//! Sector observables against the tensor-grid oracle.

use crate::diagnostics::{virial_a, virial_m};
use crate::error::Result;
use crate::kernels::direct_potential_at;
use crate::linalg::CMat;
use crate::meanfield::{assemble, exchange_block, g_alpha_term};
use num_complex::Complex64;
use crate::oracle::{lift, lift_blocks, Oracle};
use crate::state::{energy, State};
use crate::system::System;

#[derive(Clone, Debug, serde::Serialize)]
pub struct Comparison {
    pub name: &'static str,
    pub sector: f64,
    pub oracle: f64,
    /// Relative error; for fields and kernels the relative sup or Frobenius norm of the difference.
    pub error: f64,
}

fn scalar(name: &'static str, sector: f64, oracle: f64) -> Comparison {
    Comparison { name, sector, oracle, error: (sector - oracle).abs() / oracle.abs() }
}

fn frobenius(a: &CMat) -> f64 {
    (a.re.norm_squared() + a.im.norm_squared()).sqrt()
}

/// Every sector-reduced observable of `state` next to its brute-force value.
///
/// Energies and scalar traces are compared directly. ρ_γ and V∗ρ are compared
/// pointwise on the tensor grid relative to their sup norm. Exchange blocks are
/// compared through their trace against the smooth test kernel `probe` (their
/// grid entries carry product-integration weights, so only such weak values are
/// meaningful), and the pairing flow term G_α as a lifted kernel in Frobenius norm.
pub fn compare(sys: &System, state: &State, probe: &State, oracle: &Oracle) -> Result<Vec<Comparison>> {
    probe.check_system(sys)?;
    let tg = &oracle.grid;
    let lifted = lift(state, tg)?;
    let e = energy(sys, state)?;
    let oe = oracle.energy(&lifted);
    let mut out = vec![
        scalar("trace", state.trace(), oracle.trace(&lifted)),
        scalar("l2", state.angular_moment(2.0), oracle.l2(&lifted)),
        scalar("virial_m", virial_m(sys, state)?, oracle.virial_m(&lifted)),
        scalar("virial_a", virial_a(sys, state)?, oracle.virial_a(&lifted)),
        scalar("kinetic", e.kinetic, oe.kinetic),
        scalar("direct", e.direct, oe.direct),
        scalar("exchange", e.exchange, oe.exchange),
    ];
    if state.is_hfb() {
        out.push(scalar("pairing", e.pairing, oe.pairing));
    }
    out.push(scalar("energy", e.total, oe.total));

    let rho = state.density();
    let phi: Vec<f64> = rho.iter().zip(&sys.grid.weights).map(|(p, w)| p * w.sqrt()).collect();
    let rho_o = oracle.density(&lifted);
    let v_o = oracle.direct_potential(&lifted);
    let (mut drho, mut srho, mut dv, mut sv) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for (p, x) in tg.points.iter().enumerate() {
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        drho = drho.max((sys.grid.interpolate(&phi, r) - rho_o[p]).abs());
        srho = srho.max(rho_o[p].abs());
        dv = dv.max((direct_potential_at(r, &rho, &sys.grid, &sys.potential, &sys.gaunt)? - v_o[p]).abs());
        sv = sv.max(v_o[p].abs());
    }
    out.push(Comparison { name: "density", sector: drho, oracle: srho, error: drho / srho });
    out.push(Comparison { name: "direct_potential", sector: dv, oracle: sv, error: dv / sv });

    // R_γ blocks, tested against the smooth kernel `probe`: Σ_l (2l+1) Tr(X_l b_l) = Tr(R_γ B).
    let xs: Vec<CMat> = (0..=state.lambda()).map(|l| exchange_block(sys, l, &state.g)).collect();
    let tx: Complex64 = xs
        .iter()
        .zip(&probe.g)
        .enumerate()
        .map(|(l, (x, b))| x.trace_product(b) * (2 * l + 1) as f64)
        .sum();
    let ox = oracle.exchange_trace(&lifted.gamma, &lift_blocks(&sys.grid, &probe.g, tg));
    out.push(Comparison { name: "exchange_blocks", sector: tx.re, oracle: ox.re, error: (tx - ox).norm() / ox.norm() });

    // G_α = i(T - T*) with T = α (Vα)*; the two terms largely cancel, so the
    // error is measured against the size of T.
    if let (Some(a), Some(alpha)) = (&state.a, &lifted.alpha) {
        let blocks = assemble(sys, state)?;
        let pi = blocks.pi.as_ref().expect("pairing blocks of an HFB state");
        let g: Vec<CMat> = pi.iter().zip(a).map(|(p, al)| g_alpha_term(p, al)).collect();
        let lifted_g = lift_blocks(&sys.grid, &g, tg);
        let brute = oracle.g_alpha_kernel(alpha);
        let d = frobenius(&(&lifted_g - &brute));
        let t = frobenius(&oracle.g_alpha_half(alpha));
        out.push(Comparison { name: "g_alpha_kernel", sector: frobenius(&lifted_g), oracle: frobenius(&brute), error: d / t });
    }
    Ok(out)
}
