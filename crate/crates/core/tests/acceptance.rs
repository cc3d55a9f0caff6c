//! Acceptance criteria. Each test prints one `criterion N name: PASS|FAIL | detail` line.
//!
//! Run with `cargo test -p hfcollapse --test acceptance -- --nocapture --test-threads=1`
//! to see the verdict lines in order and get undisturbed timings.

use hfcollapse::diagnostics::CheckReport;
use hfcollapse::validation;
use hfcollapse::{GauntTable, Result};

fn verdict(n: usize, r: Result<CheckReport>) {
    let r = r.unwrap_or_else(|e| panic!("criterion {n:>2}: error {e}"));
    let status = if r.passed() { "PASS" } else { "FAIL" };
    println!("criterion {n:>2} {}: {status} | {}", r.name, r.detail);
    assert!(r.passed(), "criterion {n} {} failed: {}", r.name, r.detail);
}

#[test]
fn c01_conservation() {
    verdict(1, validation::conservation());
}

#[test]
fn c02_angular_momentum_hfb() {
    verdict(2, validation::angular_momentum_hfb());
}

#[test]
fn c03_hfb_degeneracy() {
    verdict(3, validation::hfb_degeneracy());
}

#[test]
fn c04_constraint_propagation() {
    verdict(4, validation::constraint_propagation());
}

#[test]
fn c05_virial_inequality() {
    verdict(5, validation::virial_inequality());
}

#[test]
fn c06_hf_blowup() {
    verdict(6, validation::hf_blowup());
}

#[test]
fn c07_hfb_blowup() {
    verdict(7, validation::hfb_blowup());
}

#[test]
fn c08_oracle_equivalence() {
    verdict(8, validation::oracle_criterion());
}

#[test]
fn c09_kernel_certification() {
    let gaunt = GauntTable::new(16).expect("gaunt table");
    verdict(9, validation::kernel_certification(&gaunt));
}

#[test]
fn c10_rk4_order() {
    verdict(10, validation::rk4_order());
}
