//! Precomputed operators shared by every state on one grid and cutoff.

use crate::error::Result;
use crate::kernels::KernelTable;
use crate::potential::PotentialSpec;
use crate::radial::{build_dilation, KineticSet, RadialGrid, SectorOperator};
use crate::GauntTable;
use std::sync::Arc;

#[derive(Clone, Debug)]
pub struct System {
    pub grid: Arc<RadialGrid>,
    pub lambda: usize,
    pub potential: PotentialSpec,
    pub gaunt: GauntTable,
    pub kernels: KernelTable,
    /// K_l with the physical mass for l = 0..=Λ+1 (sector Λ+1 is used by the M observable).
    pub kinetics: KineticSet,
    /// (-Δ)^{1/2} per sector for l = 0..=Λ.
    pub massless: KineticSet,
    pub dilation: SectorOperator,
}

impl System {
    pub fn new(grid: Arc<RadialGrid>, potential: PotentialSpec, lambda: usize) -> Result<Self> {
        let gaunt = GauntTable::new(2 * lambda + 2)?;
        let kernels = KernelTable::new(&grid, &potential, &gaunt, lambda)?;
        let kinetics = KineticSet::new(lambda + 1, potential.mass, &grid)?;
        let massless = if potential.mass == 0.0 {
            KineticSet { mass: 0.0, ops: kinetics.ops[..=lambda].to_vec() }
        } else {
            KineticSet::new(lambda, 0.0, &grid)?
        };
        let dilation = build_dilation(&grid);
        Ok(Self { grid, lambda, potential, gaunt, kernels, kinetics, massless, dilation })
    }

    /// Same operators with a different coupling constant; kernels do not depend on κ.
    pub fn with_coupling(&self, coupling: f64) -> Result<Self> {
        let mut s = self.clone();
        s.potential = self.potential.with_coupling(coupling)?;
        Ok(s)
    }

    pub fn n(&self) -> usize {
        self.grid.len()
    }
}
