//! Radial grids and per-sector operators on L²([0, R], r² dr).
//!
//! A kernel k(r, r') is stored in the symmetric basis as
//! M_ij = sqrt(w_i) k(r_i, r_j) sqrt(w_j), where w_i are the r² dr quadrature
//! weights. In this basis the weighted inner product is Euclidean, so traces,
//! products and adjoints are the plain matrix ones. The reduced radial function
//! u = r f vanishes at r = R (Dirichlet wall).

use crate::error::{Error, Result};
use crate::linalg::{symmetric_function, CMat};
use crate::quadrature::GaussLegendre;
use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridScheme {
    /// Midpoint grid with a sine-series (DST-II) kinetic operator.
    Uniform,
    /// Gauss-Legendre nodes mapped to (0, R) with Lagrange-mesh derivatives.
    LegendreMapped,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: usize,
    pub radius: f64,
    pub scheme: GridScheme,
}

#[derive(Clone, Debug)]
pub struct RadialGrid {
    pub spec: GridSpec,
    /// Nodes r_i in (0, R).
    pub points: Vec<f64>,
    /// r² dr weights.
    pub weights: Vec<f64>,
    /// dr weights.
    pub line_weights: Vec<f64>,
    id: u64,
    /// Barycentric data for the Lagrange mesh (scaled coordinate and weights, endpoints included).
    bary: Option<(Vec<f64>, Vec<f64>)>,
}

pub fn build_grid(n: usize, radius: f64, scheme: GridScheme) -> Result<RadialGrid> {
    if n < 8 {
        return Err(Error::InvalidParameter(format!("grid needs at least 8 points, got {n}")));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidParameter(format!("grid radius must be positive, got {radius}")));
    }
    let (points, line_weights, bary) = match scheme {
        GridScheme::Uniform => {
            let h = radius / n as f64;
            let p = (0..n).map(|i| (i as f64 + 0.5) * h).collect();
            (p, vec![h; n], None)
        }
        GridScheme::LegendreMapped => {
            let rule = GaussLegendre::<f64>::new(n)?;
            let (p, w) = rule.mapped(0.0, radius);
            let mut z = Vec::with_capacity(n + 2);
            z.push(-2.0);
            z.extend(p.iter().map(|&r| 4.0 * r / radius - 2.0));
            z.push(2.0);
            let lam = barycentric_weights(&z);
            (p, w, Some((z, lam)))
        }
    };
    let weights = points.iter().zip(&line_weights).map(|(r, w)| r * r * w).collect();
    let mut id: u64 = 0xcbf2_9ce4_8422_2325;
    for v in [n as u64, radius.to_bits(), scheme as u64] {
        id = (id ^ v).wrapping_mul(0x1000_0000_01b3);
    }
    Ok(RadialGrid {
        spec: GridSpec { n, radius, scheme },
        points,
        weights,
        line_weights,
        id,
        bary,
    })
}

fn barycentric_weights(z: &[f64]) -> Vec<f64> {
    (0..z.len())
        .map(|j| {
            let mut p = 1.0;
            for (k, &zk) in z.iter().enumerate() {
                if k != j {
                    p *= z[j] - zk;
                }
            }
            1.0 / p
        })
        .collect()
}

/// Fornberg finite-difference weights for the first derivative at x0.
fn fd_weights(x0: f64, xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let m = 1;
    let mut c = vec![vec![0.0; m + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.iter().map(|row| row[1]).collect()
}

const FD_STENCIL: usize = 9;

impl RadialGrid {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn radius(&self) -> f64 {
        self.spec.radius
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn sqrt_weights(&self) -> Vec<f64> {
        self.weights.iter().map(|w| w.sqrt()).collect()
    }

    /// Symmetric-basis matrix of a real kernel.
    pub fn kernel_matrix<F: Fn(f64, f64) -> f64>(&self, k: F) -> DMatrix<f64> {
        let s = self.sqrt_weights();
        let n = self.len();
        DMatrix::from_fn(n, n, |i, j| s[i] * k(self.points[i], self.points[j]) * s[j])
    }

    /// Kernel values k(r_i, r_j) from a symmetric-basis matrix.
    pub fn kernel_values(&self, m: &CMat) -> CMat {
        let s = self.sqrt_weights();
        let n = self.len();
        let scale = DMatrix::from_fn(n, n, |i, j| 1.0 / (s[i] * s[j]));
        m.hadamard_real(&scale)
    }

    /// Symmetric-basis vector of a radial function f.
    pub fn function_vector<F: Fn(f64) -> f64>(&self, f: F) -> Vec<f64> {
        self.points.iter().zip(&self.weights).map(|(&r, &w)| w.sqrt() * f(r)).collect()
    }

    /// -d²/dr² acting on u = r f with u(R) = 0, in the symmetric basis.
    pub fn laplacian(&self) -> DMatrix<f64> {
        let n = self.len();
        match self.spec.scheme {
            GridScheme::Uniform => {
                let s = self.dst_matrix();
                let r = self.spec.radius;
                let k2 = DMatrix::from_fn(n, n, |k, j| {
                    if k == j {
                        ((k + 1) as f64 * PI / r).powi(2)
                    } else {
                        0.0
                    }
                });
                let t = s.transpose() * k2 * &s;
                (&t + t.transpose()) * 0.5
            }
            GridScheme::LegendreMapped => {
                let r = self.spec.radius;
                let m = n + 3;
                let fine = GaussLegendre::<f64>::new(m).expect("fine rule");
                let (xf, wf) = fine.mapped(0.0, r);
                let scale = 4.0 / r;
                let mut d = DMatrix::zeros(m, n);
                for q in 0..m {
                    let row = self.lagrange_derivatives(4.0 * xf[q] / r - 2.0);
                    for j in 0..n {
                        d[(q, j)] = row[j] * scale;
                    }
                }
                let wd = DMatrix::from_fn(m, n, |q, j| d[(q, j)] * wf[q]);
                let qm = d.transpose() * wd;
                let s: Vec<f64> = self.line_weights.iter().map(|w| 1.0 / w.sqrt()).collect();
                let t = DMatrix::from_fn(n, n, |i, j| s[i] * qm[(i, j)] * s[j]);
                (&t + t.transpose()) * 0.5
            }
        }
    }

    /// Orthonormal DST-II matrix S with rows indexed by the sine mode k = 1..N.
    fn dst_matrix(&self) -> DMatrix<f64> {
        let n = self.len();
        let nf = n as f64;
        DMatrix::from_fn(n, n, |k, i| {
            let norm = if k + 1 == n { (1.0 / nf).sqrt() } else { (2.0 / nf).sqrt() };
            norm * ((k + 1) as f64 * PI * (i as f64 + 0.5) / nf).sin()
        })
    }

    /// Derivatives of the interior Lagrange basis polynomials at scaled coordinate x.
    fn lagrange_derivatives(&self, x: f64) -> Vec<f64> {
        let (z, lam) = self.bary.as_ref().expect("Lagrange mesh data");
        let n = self.len();
        if let Some(p) = z.iter().position(|&zk| zk == x) {
            // Node coincidence: differentiation-matrix row.
            let mut row = vec![0.0; n];
            let mut diag = 0.0;
            for k in 0..z.len() {
                if k != p {
                    let v = (lam[k] / lam[p]) / (z[p] - z[k]);
                    diag -= v;
                    if (1..=n).contains(&k) {
                        row[k - 1] = v;
                    }
                }
            }
            if (1..=n).contains(&p) {
                row[p - 1] = diag;
            }
            return row;
        }
        let inv: Vec<f64> = z.iter().map(|&zk| 1.0 / (x - zk)).collect();
        let denom: f64 = lam.iter().zip(&inv).map(|(l, i)| l * i).sum();
        let total: f64 = inv.iter().sum();
        (1..=n)
            .map(|j| {
                let lj = lam[j] * inv[j] / denom;
                lj * (total - inv[j])
            })
            .collect()
    }

    /// Cardinal functions: u(r) = Σ_i θ_i(r) u_i for the represented u = r f.
    pub fn cardinal(&self, r: f64) -> Vec<f64> {
        let n = self.len();
        match self.spec.scheme {
            GridScheme::Uniform => {
                let rr = self.spec.radius;
                let h = rr / n as f64;
                let nf = n as f64;
                let mut out = vec![0.0; n];
                for k in 0..n {
                    let sigma = if k + 1 == n { std::f64::consts::FRAC_1_SQRT_2 } else { 1.0 };
                    let norm = if k + 1 == n { (1.0 / nf).sqrt() } else { (2.0 / nf).sqrt() };
                    let mode = sigma * (h * 2.0 / rr).sqrt() * ((k + 1) as f64 * PI * r / rr).sin();
                    for (i, o) in out.iter_mut().enumerate() {
                        *o += norm * ((k + 1) as f64 * PI * (i as f64 + 0.5) / nf).sin() * mode;
                    }
                }
                out
            }
            GridScheme::LegendreMapped => {
                let (z, lam) = self.bary.as_ref().expect("Lagrange mesh data");
                let x = 4.0 * r / self.spec.radius - 2.0;
                if let Some(p) = z.iter().position(|&zk| zk == x) {
                    let mut out = vec![0.0; n];
                    if (1..=n).contains(&p) {
                        out[p - 1] = 1.0;
                    }
                    return out;
                }
                let terms: Vec<f64> = z.iter().zip(lam).map(|(&zk, &l)| l / (x - zk)).collect();
                let denom: f64 = terms.iter().sum();
                (1..=n).map(|j| terms[j] / denom).collect()
            }
        }
    }

    /// Cardinal functions at many radii, one row per radius.
    pub fn cardinal_matrix(&self, rs: &[f64]) -> DMatrix<f64> {
        let n = self.len();
        match self.spec.scheme {
            GridScheme::Uniform => {
                let rr = self.spec.radius;
                let h = rr / n as f64;
                let modes = DMatrix::from_fn(rs.len(), n, |p, k| {
                    let sigma = if k + 1 == n { std::f64::consts::FRAC_1_SQRT_2 } else { 1.0 };
                    sigma * (h * 2.0 / rr).sqrt() * ((k + 1) as f64 * PI * rs[p] / rr).sin()
                });
                modes * self.dst_matrix()
            }
            GridScheme::LegendreMapped => {
                let mut out = DMatrix::zeros(rs.len(), n);
                for (p, &r) in rs.iter().enumerate() {
                    for (j, v) in self.cardinal(r).into_iter().enumerate() {
                        out[(p, j)] = v;
                    }
                }
                out
            }
        }
    }

    /// Interpolate a symmetric-basis vector to radius r, returning f(r).
    pub fn interpolate(&self, phi: &[f64], r: f64) -> f64 {
        let theta = self.cardinal(r);
        let u: f64 = theta
            .iter()
            .zip(phi)
            .zip(&self.line_weights)
            .map(|((t, p), w)| t * p / w.sqrt())
            .sum();
        u / r
    }

    /// d/dr acting on samples f(r_i) (not on the symmetric basis).
    pub fn derivative_values(&self) -> DMatrix<f64> {
        let n = self.len();
        match self.spec.scheme {
            GridScheme::Uniform => {
                let mut d = DMatrix::zeros(n, n);
                let stencil = FD_STENCIL.min(n);
                let half = stencil / 2;
                for i in 0..n {
                    let start = i.saturating_sub(half).min(n - stencil);
                    let xs: Vec<f64> = (start..start + stencil).map(|j| self.points[j]).collect();
                    let w = fd_weights(self.points[i], &xs);
                    for (k, wk) in w.iter().enumerate() {
                        d[(i, start + k)] = *wk;
                    }
                }
                d
            }
            GridScheme::LegendreMapped => {
                let x: Vec<f64> = self.points.iter().map(|&r| 4.0 * r / self.spec.radius - 2.0).collect();
                let lam = barycentric_weights(&x);
                let scale = 4.0 / self.spec.radius;
                let mut d = DMatrix::zeros(n, n);
                for i in 0..n {
                    let mut diag = 0.0;
                    for j in 0..n {
                        if i != j {
                            let v = (lam[j] / lam[i]) / (x[i] - x[j]);
                            d[(i, j)] = v * scale;
                            diag -= v;
                        }
                    }
                    d[(i, i)] = diag * scale;
                }
                d
            }
        }
    }

    /// d/dr in the symmetric basis: W^{1/2} D W^{-1/2}.
    pub fn radial_derivative(&self) -> DMatrix<f64> {
        let d = self.derivative_values();
        let s = self.sqrt_weights();
        DMatrix::from_fn(self.len(), self.len(), |i, j| s[i] * d[(i, j)] / s[j])
    }
}

/// A per-sector operator in the symmetric basis.
#[derive(Clone, Debug)]
pub struct SectorOperator {
    pub ell: usize,
    pub grid_id: u64,
    pub matrix: CMat,
}

impl SectorOperator {
    pub fn new(ell: usize, grid: &RadialGrid, matrix: CMat) -> Result<Self> {
        if matrix.nrows() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "operator of size {} on grid of {} points",
                matrix.nrows(),
                grid.len()
            )));
        }
        Ok(Self { ell, grid_id: grid.id(), matrix })
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.matrix.hermitian_defect() <= tol
    }
}

fn check_pair(a: &SectorOperator, b: &SectorOperator) -> Result<()> {
    if a.grid_id != b.grid_id || a.matrix.nrows() != b.matrix.nrows() {
        return Err(Error::GridMismatch("operators live on different grids".into()));
    }
    if a.ell != b.ell {
        return Err(Error::SectorMismatch(format!("sector {} vs sector {}", a.ell, b.ell)));
    }
    Ok(())
}

/// Tr of the operator with respect to the r² dr measure.
pub fn weighted_trace(op: &SectorOperator) -> Complex64 {
    op.matrix.trace()
}

pub fn weighted_product(a: &SectorOperator, b: &SectorOperator) -> Result<SectorOperator> {
    check_pair(a, b)?;
    Ok(SectorOperator { ell: a.ell, grid_id: a.grid_id, matrix: a.matrix.mul(&b.matrix) })
}

pub fn commutator(a: &SectorOperator, b: &SectorOperator) -> Result<SectorOperator> {
    check_pair(a, b)?;
    let ab = a.matrix.mul(&b.matrix);
    let ba = b.matrix.mul(&a.matrix);
    Ok(SectorOperator { ell: a.ell, grid_id: a.grid_id, matrix: &ab - &ba })
}

pub fn operator_norm(op: &SectorOperator) -> f64 {
    op.matrix.spectral_norm()
}

/// K_l = sqrt(-d²/dr² + l(l+1)/r² + m²) together with its spectral data.
#[derive(Clone, Debug)]
pub struct KineticOperator {
    pub ell: usize,
    pub mass: f64,
    pub matrix: DMatrix<f64>,
    pub squared: DMatrix<f64>,
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<f64>,
}

impl KineticOperator {
    pub fn as_sector(&self, grid: &RadialGrid) -> SectorOperator {
        SectorOperator { ell: self.ell, grid_id: grid.id(), matrix: CMat::from_real(self.matrix.clone()) }
    }

    /// Spectral function f(K_l).
    pub fn function<F: Fn(f64) -> f64>(&self, f: F) -> DMatrix<f64> {
        let v = &self.eigenvectors;
        let scaled = DMatrix::from_fn(v.nrows(), v.ncols(), |r, c| v[(r, c)] * f(self.eigenvalues[c]));
        let out = scaled * v.transpose();
        (&out + out.transpose()) * 0.5
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        self.function(|x| 1.0 / x)
    }
}

pub fn build_kinetic(ell: usize, mass: f64, grid: &RadialGrid) -> Result<KineticOperator> {
    if !(mass >= 0.0 && mass.is_finite()) {
        return Err(Error::InvalidParameter(format!("mass must be non-negative, got {mass}")));
    }
    let centrifugal = (ell * (ell + 1)) as f64;
    let mut sq = grid.laplacian();
    for (i, &r) in grid.points.iter().enumerate() {
        sq[(i, i)] += centrifugal / (r * r) + mass * mass;
    }
    let e = SymmetricEigen::new(sq.clone());
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&a, &b| e.eigenvalues[a].total_cmp(&e.eigenvalues[b]));
    let scale = e.eigenvalues.iter().fold(0.0f64, |a, b| a.max(b.abs())).max(1.0);
    let floor = mass * mass;
    let mut vals = Vec::with_capacity(grid.len());
    for &l in order.iter().map(|&i| &e.eigenvalues[i]) {
        if l < floor - 1e-10 * scale {
            return Err(Error::Numerical(format!(
                "K_{ell}^2 has eigenvalue {l} below m^2 = {floor}"
            )));
        }
        vals.push(l.max(floor).sqrt());
    }
    let v = DMatrix::from_fn(grid.len(), grid.len(), |r, c| e.eigenvectors[(r, order[c])]);
    let scaled = DMatrix::from_fn(v.nrows(), v.ncols(), |r, c| v[(r, c)] * vals[c]);
    let k = scaled * v.transpose();
    let k = (&k + k.transpose()) * 0.5;
    Ok(KineticOperator { ell, mass, matrix: k, squared: sq, eigenvalues: vals, eigenvectors: v })
}

/// Kinetic operators for sectors 0..=lmax.
#[derive(Clone, Debug)]
pub struct KineticSet {
    pub mass: f64,
    pub ops: Vec<KineticOperator>,
}

impl KineticSet {
    pub fn new(lmax: usize, mass: f64, grid: &RadialGrid) -> Result<Self> {
        let ops = (0..=lmax).map(|l| build_kinetic(l, mass, grid)).collect::<Result<Vec<_>>>()?;
        Ok(Self { mass, ops })
    }

    pub fn get(&self, ell: usize) -> &KineticOperator {
        &self.ops[ell]
    }

    pub fn lmax(&self) -> usize {
        self.ops.len() - 1
    }
}

/// Raw dilation generator in the sample representation without the factor -i: 2 r d/dr + 3.
pub fn dilation_raw(grid: &RadialGrid) -> DMatrix<f64> {
    let mut d = grid.derivative_values();
    for (i, &r) in grid.points.iter().enumerate() {
        for j in 0..grid.len() {
            d[(i, j)] *= 2.0 * r;
        }
        d[(i, i)] += 3.0;
    }
    d
}

/// A = -i(2 r ∂_r + 3), symmetrized in the weighted inner product. Same in every sector.
pub fn build_dilation(grid: &RadialGrid) -> SectorOperator {
    let raw = dilation_raw(grid);
    let s = grid.sqrt_weights();
    let n = grid.len();
    let b = DMatrix::from_fn(n, n, |i, j| s[i] * raw[(i, j)] / s[j]);
    let anti = (&b - b.transpose()) * 0.5;
    SectorOperator { ell: 0, grid_id: grid.id(), matrix: CMat::from_real(anti).mul_neg_i() }
}

/// sqrt of a symmetric positive semidefinite matrix.
pub fn sqrt_psd(m: &DMatrix<f64>) -> DMatrix<f64> {
    symmetric_function(m, |x| x.max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_integrate_r_squared() {
        for scheme in [GridScheme::Uniform, GridScheme::LegendreMapped] {
            let g = build_grid(64, 10.0, scheme).unwrap();
            let s: f64 = g.weights.iter().sum();
            let tol = if scheme == GridScheme::Uniform { 1e-3 } else { 1e-10 };
            assert!((s - 1000.0 / 3.0).abs() / (1000.0 / 3.0) < tol, "{scheme:?} {s}");
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(build_grid(2, 1.0, GridScheme::Uniform).is_err());
        assert!(build_grid(10, -1.0, GridScheme::Uniform).is_err());
        let g = build_grid(8, 1.0, GridScheme::Uniform).unwrap();
        assert!(build_kinetic(0, -1.0, &g).is_err());
    }

    #[test]
    fn lowest_massless_s_wave_mode() {
        let r = 5.0;
        let g = build_grid(256, r, GridScheme::Uniform).unwrap();
        let k = build_kinetic(0, 0.0, &g).unwrap();
        assert!((k.eigenvalues[0] - PI / r).abs() / (PI / r) < 0.02);
        let g = build_grid(96, r, GridScheme::LegendreMapped).unwrap();
        let k = build_kinetic(0, 0.0, &g).unwrap();
        assert!((k.eigenvalues[0] - PI / r).abs() / (PI / r) < 0.02);
    }

    #[test]
    fn kinetic_is_hermitian_and_squares_back() {
        for scheme in [GridScheme::Uniform, GridScheme::LegendreMapped] {
            let g = build_grid(48, 8.0, scheme).unwrap();
            for l in 0..4 {
                let k = build_kinetic(l, 0.7, &g).unwrap();
                let sym = (&k.matrix - k.matrix.transpose()).amax();
                assert!(sym < 1e-12);
                assert!(k.eigenvalues[0] >= 0.7 - 1e-12);
                let err = (&k.matrix * &k.matrix - &k.squared).amax() / k.squared.amax();
                assert!(err < 1e-10);
            }
        }
    }

    #[test]
    fn cardinal_functions_interpolate_nodes() {
        for scheme in [GridScheme::Uniform, GridScheme::LegendreMapped] {
            let g = build_grid(20, 3.0, scheme).unwrap();
            for i in [0, 7, 19] {
                let th = g.cardinal(g.points[i]);
                for (j, t) in th.iter().enumerate() {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((t - want).abs() < 1e-12, "{scheme:?} {i} {j} {t}");
                }
            }
        }
    }

    #[test]
    fn spectral_interpolation_of_gaussian() {
        for scheme in [GridScheme::Uniform, GridScheme::LegendreMapped] {
            let g = build_grid(64, 10.0, scheme).unwrap();
            let f = |r: f64| (-r * r / 2.0).exp();
            let phi = g.function_vector(f);
            for &r in &[0.05, 0.8, 1.37, 2.9, 5.5] {
                assert!((g.interpolate(&phi, r) - f(r)).abs() < 1e-7, "{scheme:?} r={r}");
            }
        }
    }

    #[test]
    fn derivative_is_exact_on_low_polynomials() {
        for scheme in [GridScheme::Uniform, GridScheme::LegendreMapped] {
            let g = build_grid(32, 4.0, scheme).unwrap();
            let d = g.derivative_values();
            let f: Vec<f64> = g.points.iter().map(|r| 1.0 + r - 0.5 * r * r * r).collect();
            for i in 0..g.len() {
                let r = g.points[i];
                let df: f64 = (0..g.len()).map(|j| d[(i, j)] * f[j]).sum();
                assert!((df - (1.0 - 1.5 * r * r)).abs() < 1e-8, "{scheme:?} {i}");
            }
        }
    }

    #[test]
    fn raw_dilation_kills_constants() {
        let g = build_grid(32, 4.0, GridScheme::Uniform).unwrap();
        let a = dilation_raw(&g);
        for i in 0..g.len() {
            let s: f64 = (0..g.len()).map(|j| a[(i, j)]).sum();
            assert!((s - 3.0).abs() < 1e-9);
        }
    }

    #[test]
    fn dilation_is_hermitian() {
        let g = build_grid(40, 6.0, GridScheme::Uniform).unwrap();
        let a = build_dilation(&g);
        assert!(a.is_hermitian(1e-14));
    }

    #[test]
    fn identity_kernel_trace_is_box_volume_over_four_pi() {
        let g = build_grid(64, 2.0, GridScheme::LegendreMapped).unwrap();
        let m = SectorOperator::new(0, &g, CMat::from_real(g.kernel_matrix(|_, _| 1.0))).unwrap();
        assert!((weighted_trace(&m).re - 8.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn mismatches_are_rejected() {
        let g1 = build_grid(16, 2.0, GridScheme::Uniform).unwrap();
        let g2 = build_grid(16, 3.0, GridScheme::Uniform).unwrap();
        let a = SectorOperator::new(0, &g1, CMat::identity(16)).unwrap();
        let b = SectorOperator::new(0, &g2, CMat::identity(16)).unwrap();
        let c = SectorOperator::new(1, &g1, CMat::identity(16)).unwrap();
        assert!(matches!(weighted_product(&a, &b), Err(Error::GridMismatch(_))));
        assert!(matches!(commutator(&a, &c), Err(Error::SectorMismatch(_))));
        assert!(SectorOperator::new(0, &g1, CMat::identity(5)).is_err());
    }

    #[test]
    fn commutator_of_kinetic_with_itself_vanishes() {
        let g = build_grid(24, 5.0, GridScheme::Uniform).unwrap();
        let k = build_kinetic(1, 1.0, &g).unwrap().as_sector(&g);
        let c = commutator(&k, &k).unwrap();
        assert!(operator_norm(&c) < 1e-10);
    }
}
