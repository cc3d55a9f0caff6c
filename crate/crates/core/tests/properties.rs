//! Randomized invariants of states, mean-field blocks, kinetic operators and kernels.

use hfcollapse::checkpoint;
use hfcollapse::diagnostics::{radial_derivative_inverse_norm, virial_m};
use hfcollapse::initial::random_state;
use hfcollapse::kernels::newton_kernel;
use hfcollapse::legendre::legendre_all;
use hfcollapse::meanfield::{assemble, g_alpha_term};
use hfcollapse::potential::{PotentialSpec, WSpec};
use hfcollapse::quadrature::adaptive_simpson;
use hfcollapse::radial::{build_grid, GridScheme, KineticSet};
use hfcollapse::state::{check_constraints, energy, hf_energy, hfb_energy, State};
use hfcollapse::system::System;
use hfcollapse::GauntTable;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::sync::Arc;

fn scheme(legendre: bool) -> GridScheme {
    if legendre {
        GridScheme::LegendreMapped
    } else {
        GridScheme::Uniform
    }
}

fn small_system(legendre: bool, w: WSpec, lambda: usize) -> System {
    let grid = Arc::new(build_grid(16, 6.0, scheme(legendre)).unwrap());
    let pot = PotentialSpec::new(0.9, 1.0, w, 0.5, 12.0).unwrap();
    System::new(grid, pot, lambda).unwrap()
}

fn state(sys: &System, seed: u64, hfb: bool) -> State {
    random_state(sys, 2, hfb, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn pairing_mass_is_bounded_by_trace(seed in any::<u64>(), legendre in any::<bool>()) {
        let sys = small_system(legendre, WSpec::Newton, 2);
        let st = state(&sys, seed, true);
        prop_assert!(check_constraints(&st).holds(1e-9));
        prop_assert!(st.pairing_mass() <= st.trace());
    }

    #[test]
    fn hfb_energy_without_pairing_is_hf_energy(seed in any::<u64>(), legendre in any::<bool>()) {
        let sys = small_system(legendre, WSpec::Gaussian { strength: 0.3, width: 1.0 }, 1);
        let st = state(&sys, seed, false);
        let hf = hf_energy(&sys, &st).unwrap();
        let hfb = hfb_energy(&sys, &st.to_hfb()).unwrap();
        prop_assert_eq!(hf.to_bits(), hfb.to_bits());
    }

    #[test]
    fn newton_exchange_never_exceeds_direct(seed in any::<u64>(), legendre in any::<bool>(), hfb in any::<bool>()) {
        let sys = small_system(legendre, WSpec::Newton, 2);
        let e = energy(&sys, &state(&sys, seed, hfb)).unwrap();
        prop_assert!(e.exchange.abs() <= e.direct.abs() * (1.0 + 1e-12));
    }

    #[test]
    fn virial_m_is_nonnegative(seed in any::<u64>(), legendre in any::<bool>()) {
        let sys = small_system(legendre, WSpec::Newton, 2);
        prop_assert!(virial_m(&sys, &state(&sys, seed, false)).unwrap() >= 0.0);
    }

    #[test]
    fn pairing_flow_term_is_hermitian_and_traceless(seed in any::<u64>(), legendre in any::<bool>()) {
        let sys = small_system(legendre, WSpec::Newton, 2);
        let st = state(&sys, seed, true);
        let blocks = assemble(&sys, &st).unwrap();
        let pi = blocks.pi.as_ref().unwrap();
        let a = st.a.as_ref().unwrap();
        let (mut tr, mut alpha) = (0.0, 0.0);
        for (l, (p, al)) in pi.iter().zip(a).enumerate() {
            let g = g_alpha_term(p, al);
            let adj = g.adjoint();
            prop_assert!((&g - &adj).max_abs() <= 1e-12 * g.max_abs().max(1.0));
            tr += (2 * l + 1) as f64 * g.re.trace();
            alpha += (2 * l + 1) as f64 * (al.re.norm_squared() + al.im.norm_squared());
        }
        prop_assert!(tr.abs() <= 1e-10 * alpha.max(1.0));
    }

    #[test]
    fn assemble_is_idempotent(seed in any::<u64>(), hfb in any::<bool>()) {
        let sys = small_system(false, WSpec::Gaussian { strength: 0.2, width: 0.8 }, 2);
        let st = state(&sys, seed, hfb);
        let (x, y) = (assemble(&sys, &st).unwrap(), assemble(&sys, &st).unwrap());
        prop_assert_eq!(x.stamp, y.stamp);
        prop_assert_eq!(x.v_rho, y.v_rho);
        for (a, b) in x.h.iter().zip(&y.h) {
            prop_assert_eq!((a - b).max_abs(), 0.0);
        }
    }

    #[test]
    fn checkpoint_round_trip(seed in any::<u64>(), legendre in any::<bool>(), hfb in any::<bool>()) {
        let sys = small_system(legendre, WSpec::Newton, 1);
        let st = state(&sys, seed, hfb);
        let mut bytes = Vec::new();
        checkpoint::write(&st, &sys.potential, &mut bytes).unwrap();
        let (_, back) = checkpoint::read(bytes.as_slice()).unwrap();
        prop_assert_eq!(back.fingerprint(), st.fingerprint());
        prop_assert_eq!(back.distance(&st), 0.0);
    }

    #[test]
    fn kinetic_spectrum_is_above_mass_and_grows_with_l(mass in 0.0f64..3.0, legendre in any::<bool>()) {
        let grid = build_grid(24, 8.0, scheme(legendre)).unwrap();
        let kin = KineticSet::new(4, mass, &grid).unwrap();
        for l in 0..=4 {
            let ev = &kin.get(l).eigenvalues;
            prop_assert!(ev.iter().all(|&e| e >= mass * (1.0 - 1e-12)));
            if l > 0 {
                let prev = &kin.get(l - 1).eigenvalues;
                let (lo, lo_prev) = (ev.iter().cloned().fold(f64::MAX, f64::min), prev.iter().cloned().fold(f64::MAX, f64::min));
                prop_assert!(lo >= lo_prev);
            }
            prop_assert!(radial_derivative_inverse_norm(&kin, l) <= 1.0 + 1e-10);
        }
    }

    #[test]
    fn newton_multipole_sum_is_exact(l in 0usize..=6, lp in 0usize..=6, r in 0.05f64..8.0, rp in 0.05f64..8.0) {
        let gaunt = GauntTable::new(16).unwrap();
        let f = |s: f64| {
            let t = ((r * r + rp * rp - s * s) / (2.0 * r * rp)).clamp(-1.0, 1.0);
            let p = legendre_all(6, t);
            -p[l] * p[lp] / (r * rp)
        };
        let q = 2.0 * PI * adaptive_simpson(f, (r - rp).abs(), r + rp, 1e-14, 60).unwrap();
        let v = newton_kernel(l, lp, r, rp, &gaunt).unwrap();
        prop_assert!((v - q).abs() <= 1e-9 * v.abs().max(q.abs()).max(1e-3), "{} vs {}", v, q);
    }
}
