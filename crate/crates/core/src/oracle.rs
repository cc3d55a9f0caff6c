//! Brute-force references on a small Cartesian grid.
//!
//! Sector states are lifted to dense kernels γ(x, y) on an n³ tensor grid and every
//! observable is recomputed by plain Riemann sums. Nonlocal operators are discrete
//! translation-invariant kernels obtained from Fourier multipliers on a zero-padded grid:
//! √(k² + m²) for the kinetic energy and the truncated Coulomb transform
//! 8π sin²(kD/2)/k² (exact for |x| ≤ D) for 1/|x|.

use crate::error::{Error, Result};
use crate::legendre::legendre_all;
use crate::linalg::CMat;
use crate::potential::PotentialSpec;
use crate::radial::RadialGrid;
use crate::state::{State, LIFT_NORM};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;

pub const MAX_POINTS: usize = 1728;

#[derive(Clone, Debug)]
pub struct TensorGrid {
    pub n: usize,
    pub h: f64,
    /// Points (x, y, z), index (i n + j) n + k.
    pub points: Vec<[f64; 3]>,
}

impl TensorGrid {
    pub fn new(n: usize, h: f64) -> Result<Self> {
        if n * n * n > MAX_POINTS || n > 12 {
            return Err(Error::OracleTooLarge { n, limit: 12 });
        }
        if n < 2 || !(h > 0.0) {
            return Err(Error::InvalidParameter(format!("tensor grid needs n >= 2 and h > 0, got {n}, {h}")));
        }
        let c = (n as f64 - 1.0) / 2.0;
        let mut points = Vec::with_capacity(n * n * n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    points.push([(i as f64 - c) * h, (j as f64 - c) * h, (k as f64 - c) * h]);
                }
            }
        }
        Ok(Self { n, h, points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn cell(&self) -> f64 {
        self.h.powi(3)
    }

    pub fn half_width(&self) -> f64 {
        (self.n as f64 - 1.0) * self.h / 2.0
    }

    fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n + j) * self.n + k
    }
}

fn norm3(x: &[f64; 3]) -> f64 {
    (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
}

/// u-kernel U_ij = M_ij / sqrt(dr_i dr_j), so that g(r, r') = θ(r)ᵀ U θ(r') / (r r').
fn u_kernel(grid: &RadialGrid, m: &CMat) -> CMat {
    let n = grid.len();
    let s: Vec<f64> = grid.line_weights.iter().map(|w| 1.0 / w.sqrt()).collect();
    m.hadamard_real(&DMatrix::from_fn(n, n, |i, j| s[i] * s[j]))
}

fn radial_rows(grid: &RadialGrid, radii: &[f64]) -> DMatrix<f64> {
    let n = grid.len();
    let mut t = DMatrix::zeros(radii.len(), n);
    for (p, &r) in radii.iter().enumerate() {
        if r <= 0.0 || r >= grid.radius() {
            continue;
        }
        let th = grid.cardinal(r);
        for i in 0..n {
            t[(p, i)] = th[i] / r;
        }
    }
    t
}

/// Dense kernel Σ_l (2l+1)/(4π) g_l(|x|, |y|) P_l(ω_x·ω_y) on the tensor grid.
pub fn lift_blocks(grid: &RadialGrid, blocks: &[CMat], tg: &TensorGrid) -> CMat {
    let p = tg.len();
    let radii: Vec<f64> = tg.points.iter().map(norm3).collect();
    let theta = radial_rows(grid, &radii);
    let lmax = blocks.len().saturating_sub(1);
    let mut out = CMat::zeros(p);
    let unit: Vec<[f64; 3]> = tg
        .points
        .iter()
        .zip(&radii)
        .map(|(x, r)| [x[0] / r, x[1] / r, x[2] / r])
        .collect();
    let mut legendre = vec![DMatrix::<f64>::zeros(p, p); lmax + 1];
    for a in 0..p {
        for b in 0..p {
            let t = (unit[a][0] * unit[b][0] + unit[a][1] * unit[b][1] + unit[a][2] * unit[b][2]).clamp(-1.0, 1.0);
            let pl = legendre_all(lmax, t);
            for l in 0..=lmax {
                legendre[l][(a, b)] = pl[l];
            }
        }
    }
    for (l, m) in blocks.iter().enumerate() {
        let u = u_kernel(grid, m);
        let radial = u.left_mul_real(&theta).right_mul_real(&theta.transpose());
        let c = (2 * l + 1) as f64 * LIFT_NORM;
        out.add_hadamard_scaled(c, &legendre[l], &radial);
    }
    out
}

/// Lifted γ and α.
#[derive(Clone, Debug)]
pub struct Lifted {
    pub gamma: CMat,
    pub alpha: Option<CMat>,
}

pub fn lift(state: &State, tg: &TensorGrid) -> Result<Lifted> {
    if tg.len() > MAX_POINTS {
        return Err(Error::OracleTooLarge { n: tg.n, limit: 12 });
    }
    Ok(Lifted {
        gamma: lift_blocks(&state.grid, &state.g, tg),
        alpha: state.a.as_ref().map(|a| lift_blocks(&state.grid, a, tg)),
    })
}

/// Single kernel value Σ_l (2l+1)/(4π) g_l(|x|, |y|) P_l(ω_x·ω_y).
pub fn lift_pair(grid: &RadialGrid, blocks: &[CMat], x: [f64; 3], y: [f64; 3]) -> Complex64 {
    let (rx, ry) = (norm3(&x), norm3(&y));
    let t = radial_rows(grid, &[rx, ry]);
    let cos = ((x[0] * y[0] + x[1] * y[1] + x[2] * y[2]) / (rx * ry)).clamp(-1.0, 1.0);
    let pl = legendre_all(blocks.len().saturating_sub(1), cos);
    let mut acc = Complex64::new(0.0, 0.0);
    for (l, m) in blocks.iter().enumerate() {
        let u = u_kernel(grid, m);
        let a = t.row(0).transpose();
        let b = t.row(1).transpose();
        let re = a.dot(&(&u.re * &b));
        let im = a.dot(&(&u.im * &b));
        acc += Complex64::new(re, im) * ((2 * l + 1) as f64 * LIFT_NORM * pl[l]);
    }
    acc
}

/// g_l(r, r') = 2π ∫ γ(r e_z, r' ω(t)) P_l(t) dt recovered from a pointwise kernel.
pub fn project_sector<F: Fn([f64; 3], [f64; 3]) -> Complex64>(kernel: F, l: usize, r: f64, rp: f64, order: usize) -> Complex64 {
    let rule = crate::GaussRule::new(order).expect("rule");
    let mut acc = Complex64::new(0.0, 0.0);
    for (t, w) in rule.nodes.iter().zip(&rule.weights) {
        let s = (1.0 - t * t).max(0.0).sqrt();
        let v = kernel([0.0, 0.0, r], [rp * s, 0.0, rp * t]);
        acc += v * (w * crate::legendre::legendre_eval(l, *t).expect("in range"));
    }
    acc * (2.0 * PI)
}

/// Inverse 3D DFT of a multiplier on an m³ periodic grid of spacing h, divided by the
/// box volume: the kernel κ(Δ) with (Kf)(x) ≈ Σ_y h³ κ(x - y) f(y).
fn multiplier_kernel<F: Fn(f64) -> f64>(m: usize, h: f64, mult: F) -> Vec<f64> {
    let lp = m as f64 * h;
    let mut data = vec![Complex64::new(0.0, 0.0); m * m * m];
    let freq = |i: usize| -> f64 {
        let s = if i <= m / 2 { i as f64 } else { i as f64 - m as f64 };
        2.0 * PI * s / lp
    };
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                let k2 = freq(i).powi(2) + freq(j).powi(2) + freq(k).powi(2);
                data[(i * m + j) * m + k] = Complex64::new(mult(k2), 0.0);
            }
        }
    }
    fft3_inverse(&mut data, m);
    let vol = lp.powi(3);
    data.iter().map(|z| z.re / vol).collect()
}

fn fft3_inverse(data: &mut [Complex64], m: usize) {
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_inverse(m);
    let mut line = vec![Complex64::new(0.0, 0.0); m];
    for axis in 0..3 {
        let stride = match axis {
            0 => m * m,
            1 => m,
            _ => 1,
        };
        for a in 0..m {
            for b in 0..m {
                let base = match axis {
                    0 => a * m + b,
                    1 => a * m * m + b,
                    _ => (a * m + b) * m,
                };
                for (t, x) in line.iter_mut().enumerate() {
                    *x = data[base + t * stride];
                }
                fft.process(&mut line);
                for (t, x) in line.iter().enumerate() {
                    data[base + t * stride] = *x;
                }
            }
        }
    }
}

/// P×P matrix of a displacement kernel on the tensor grid.
fn displacement_matrix(tg: &TensorGrid, m: usize, kernel: &[f64]) -> DMatrix<f64> {
    let n = tg.n;
    let p = tg.len();
    let wrap = |d: isize| -> usize { d.rem_euclid(m as isize) as usize };
    let mut out = DMatrix::zeros(p, p);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let a = tg.index(i, j, k);
                for i2 in 0..n {
                    for j2 in 0..n {
                        for k2 in 0..n {
                            let b = tg.index(i2, j2, k2);
                            let di = wrap(i as isize - i2 as isize);
                            let dj = wrap(j as isize - j2 as isize);
                            let dk = wrap(k as isize - k2 as isize);
                            out[(a, b)] = kernel[(di * m + dj) * m + dk];
                        }
                    }
                }
            }
        }
    }
    out
}

/// Periodic spectral first-derivative matrix on n points of spacing h.
pub fn spectral_derivative(n: usize, h: f64) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |j, k| {
        if j == k {
            return 0.0;
        }
        let d = j as f64 - k as f64;
        let sign = if (j + k) % 2 == 0 { 1.0 } else { -1.0 };
        let x = PI * d / n as f64;
        if n % 2 == 0 {
            sign * PI / (n as f64 * h) / x.tan()
        } else {
            sign * PI / (n as f64 * h) / x.sin()
        }
    })
}

/// Kernel of ∫ f(y)/|x - y| dy on the grid, from the truncated Coulomb transform on a 4n grid.
pub fn coulomb_kernel(tg: &TensorGrid) -> DMatrix<f64> {
    let m = 4 * tg.n;
    let d = 3f64.sqrt() * (tg.n as f64 - 1.0) * tg.h * 1.01;
    let kern = multiplier_kernel(m, tg.h, |k2| {
        if k2 == 0.0 {
            2.0 * PI * d * d
        } else {
            let k = k2.sqrt();
            8.0 * PI * (0.5 * k * d).sin().powi(2) / k2
        }
    });
    displacement_matrix(tg, m, &kern)
}

/// Brute-force operator set for one tensor grid and potential.
pub struct Oracle {
    pub grid: TensorGrid,
    pub potential: PotentialSpec,
    /// V(x - y) for the discrete convolution Σ_y h³ V(x - y) f(y).
    pub v: DMatrix<f64>,
    /// √(-Δ + m²) as a matrix acting on grid vectors.
    pub kinetic: DMatrix<f64>,
    /// L_k = -i lr[k].
    pub lr: [DMatrix<f64>; 3],
    /// A = -i ar.
    pub ar: DMatrix<f64>,
}

impl Oracle {
    pub fn new(tg: TensorGrid, potential: &PotentialSpec) -> Result<Self> {
        let p = tg.len();
        let coul = coulomb_kernel(&tg);
        let v = DMatrix::from_fn(p, p, |a, b| {
            let x = &tg.points[a];
            let y = &tg.points[b];
            let d = norm3(&[x[0] - y[0], x[1] - y[1], x[2] - y[2]]);
            -coul[(a, b)] + potential.w.value(d)
        });
        let m = 2 * tg.n;
        let mass2 = potential.mass * potential.mass;
        let kern = multiplier_kernel(m, tg.h, |k2| (k2 + mass2).sqrt());
        let kinetic = displacement_matrix(&tg, m, &kern) * tg.cell();
        let n = tg.n;
        let d1 = spectral_derivative(n, tg.h);
        let eye = DMatrix::<f64>::identity(n, n);
        let dx = d1.kronecker(&eye).kronecker(&eye);
        let dy = eye.kronecker(&d1).kronecker(&eye);
        let dz = eye.kronecker(&eye).kronecker(&d1);
        let coord = |c: usize| DMatrix::from_fn(p, p, |a, b| if a == b { tg.points[a][c] } else { 0.0 });
        let (x, y, z) = (coord(0), coord(1), coord(2));
        let lx = &y * &dz - &z * &dy;
        let ly = &z * &dx - &x * &dz;
        let lz = &x * &dy - &y * &dx;
        let ar = (&x * &dx + &y * &dy + &z * &dz) * 2.0 + DMatrix::identity(p, p) * 3.0;
        Ok(Self { grid: tg, potential: potential.clone(), v, kinetic, lr: [lx, ly, lz], ar })
    }

    fn cell(&self) -> f64 {
        self.grid.cell()
    }

    /// Σ_pq O_pq K_qp with K = h³ kernel.
    fn trace_with(&self, op: &DMatrix<f64>, k: &CMat) -> Complex64 {
        let c = self.cell();
        let mut re = 0.0;
        let mut im = 0.0;
        let p = k.nrows();
        for a in 0..p {
            for b in 0..p {
                re += op[(a, b)] * k.re[(b, a)];
                im += op[(a, b)] * k.im[(b, a)];
            }
        }
        Complex64::new(re, im) * c
    }

    pub fn trace(&self, l: &Lifted) -> f64 {
        l.gamma.trace().re * self.cell()
    }

    pub fn density(&self, l: &Lifted) -> Vec<f64> {
        (0..self.grid.len()).map(|a| l.gamma.re[(a, a)]).collect()
    }

    /// (V * ρ)(x_p).
    pub fn direct_potential(&self, l: &Lifted) -> Vec<f64> {
        let rho = nalgebra::DVector::from_vec(self.density(l));
        (&self.v * rho * self.cell()).iter().copied().collect()
    }

    pub fn kinetic(&self, l: &Lifted) -> f64 {
        self.trace_with(&self.kinetic, &l.gamma).re
    }

    pub fn l2(&self, l: &Lifted) -> f64 {
        // |L|² = -Σ lr_k², so Tr |L|²γ = -Σ Tr(lr_k lr_k γ).
        -self.lr.iter().map(|m| self.trace_with(&(m * m), &l.gamma).re).sum::<f64>()
    }

    pub fn virial_m(&self, l: &Lifted) -> f64 {
        let pts = &self.grid.points;
        let op = DMatrix::from_fn(self.grid.len(), self.grid.len(), |a, b| {
            self.kinetic[(a, b)] * (pts[a][0] * pts[b][0] + pts[a][1] * pts[b][1] + pts[a][2] * pts[b][2])
        });
        self.trace_with(&op, &l.gamma).re
    }

    pub fn virial_a(&self, l: &Lifted) -> f64 {
        // Tr(-i ar γ)
        let t = self.trace_with(&self.ar, &l.gamma);
        t.im
    }

    /// ∬ V(x - y) X(x, y) conj(Y(x, y)).
    fn pair_integral(&self, x: &CMat, y: &CMat) -> f64 {
        let c = self.cell() * self.cell();
        let p = x.nrows();
        let mut acc = 0.0;
        for a in 0..p {
            for b in 0..p {
                acc += self.v[(a, b)] * (x.re[(a, b)] * y.re[(a, b)] + x.im[(a, b)] * y.im[(a, b)]);
            }
        }
        acc * c
    }

    pub fn energy(&self, l: &Lifted) -> OracleEnergy {
        let kappa = self.potential.coupling;
        let rho = self.density(l);
        let vr = self.direct_potential(l);
        let direct: f64 = rho.iter().zip(&vr).map(|(a, b)| a * b).sum::<f64>() * self.cell();
        let exchange = self.pair_integral(&l.gamma, &l.gamma);
        let pairing = l.alpha.as_ref().map(|a| self.pair_integral(a, a)).unwrap_or(0.0);
        let kinetic = self.kinetic(l);
        OracleEnergy {
            kinetic,
            direct: 0.5 * kappa * direct,
            exchange: 0.5 * kappa * exchange,
            pairing: 0.5 * kappa * pairing,
            total: kinetic + 0.5 * kappa * (direct - exchange + pairing),
        }
    }

    /// Tr(R_γ B) with R_γ(x, y) = V(x - y) γ(x, y) and B a lifted kernel.
    /// R_γ(x, y) = V(x - y) γ(x, y) on the grid.
    pub fn exchange_kernel(&self, gamma: &CMat) -> CMat {
        gamma.hadamard_real(&self.v)
    }

    pub fn exchange_trace(&self, gamma: &CMat, b: &CMat) -> Complex64 {
        let c = self.cell() * self.cell();
        self.exchange_kernel(gamma).trace_product(b) * c
    }

    /// G_α(x, y) = iκ ∫ α(x, z) conj(α(y, z)) (V(y - z) - V(x - z)) dz on the grid.
    pub fn g_alpha_kernel(&self, alpha: &CMat) -> CMat {
        let t = self.g_alpha_half(alpha);
        (&t - &t.adjoint()).mul_i()
    }

    /// T(x, y) = κ ∫ α(x, z) conj(α(y, z)) V(y - z) dz, so that G_α = i(T - T*).
    pub fn g_alpha_half(&self, alpha: &CMat) -> CMat {
        let va = alpha.hadamard_real(&self.v);
        alpha.mul(&va.adjoint()).scale(self.potential.coupling * self.cell())
    }

    pub fn g_alpha_trace(&self, alpha: &CMat, b: &CMat) -> Complex64 {
        let c = self.cell();
        self.g_alpha_kernel(alpha).trace_product(b) * (c * c)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct OracleEnergy {
    pub kinetic: f64,
    pub direct: f64,
    pub exchange: f64,
    pub pairing: f64,
    pub total: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::{build_grid, GridScheme};
    use std::sync::Arc;

    #[test]
    fn resource_guard() {
        assert!(matches!(TensorGrid::new(13, 0.5), Err(Error::OracleTooLarge { .. })));
        assert!(TensorGrid::new(12, 0.5).is_ok());
    }

    #[test]
    fn coulomb_kernel_reproduces_gaussian_potential() {
        let tg = TensorGrid::new(10, 0.6).unwrap();
        let w = coulomb_kernel(&tg);
        let sigma: f64 = 0.7;
        let rho: Vec<f64> = tg.points.iter().map(|x| (-norm3(x).powi(2) / (2.0 * sigma * sigma)).exp()).collect();
        let total = (2.0 * PI * sigma * sigma).powf(1.5);
        let mut worst: f64 = 0.0;
        for a in 0..tg.len() {
            let u: f64 = (0..tg.len()).map(|b| w[(a, b)] * rho[b]).sum::<f64>() * tg.cell();
            let r = norm3(&tg.points[a]);
            let exact = total * libm_erf(r / (2f64.sqrt() * sigma)) / r;
            worst = worst.max((u - exact).abs() / exact);
        }
        assert!(worst < 1e-4, "worst relative error {worst}");
    }

    // erf via its continued series; adequate for test arguments below 6.
    fn libm_erf(x: f64) -> f64 {
        let mut sum: f64 = 0.0;
        let mut term = x;
        let mut k = 0.0;
        while term.abs() > 1e-17 * sum.abs().max(1e-300) || k < 3.0 {
            sum += term / (2.0 * k + 1.0);
            k += 1.0;
            term *= -x * x / k;
            if k > 200.0 {
                break;
            }
        }
        2.0 / PI.sqrt() * sum
    }

    #[test]
    fn spectral_derivative_of_gaussian() {
        let n = 12;
        let h = 0.5;
        let d = spectral_derivative(n, h);
        let c = (n as f64 - 1.0) / 2.0;
        let x: Vec<f64> = (0..n).map(|i| (i as f64 - c) * h).collect();
        let f = nalgebra::DVector::from_iterator(n, x.iter().map(|x| (-x * x).exp()));
        let df = &d * f;
        for i in 2..n - 2 {
            let exact = -2.0 * x[i] * (-x[i] * x[i]).exp();
            assert!((df[i] - exact).abs() < 1e-3, "{i}: {} vs {exact}", df[i]);
        }
    }

    #[test]
    fn lift_and_project_round_trip() {
        let grid = Arc::new(build_grid(24, 6.0, GridScheme::Uniform).unwrap());
        let n = grid.len();
        let f0 = grid.function_vector(|r| (-r * r / 2.0).exp());
        let f1 = grid.function_vector(|r| r * (-r * r / 3.0).exp());
        let v0 = nalgebra::DVector::from_vec(f0);
        let v1 = nalgebra::DVector::from_vec(f1);
        let blocks = vec![CMat::from_real(&v0 * v0.transpose()), CMat::from_real(&v1 * v1.transpose() * 0.5)];
        let (i, j) = (5, 9);
        let (r, rp) = (grid.points[i], grid.points[j]);
        for l in 0..2 {
            let g = project_sector(|x, y| lift_pair(&grid, &blocks, x, y), l, r, rp, 8);
            let exact = blocks[l].re[(i, j)] / (grid.weights[i] * grid.weights[j]).sqrt();
            assert!((g.re - exact).abs() < 1e-8 * exact.abs().max(1e-3), "l={l}: {} vs {exact}", g.re);
        }
        let _ = n;
    }

    #[test]
    fn lifted_kernel_is_hermitian_and_rotation_invariant() {
        let grid = Arc::new(build_grid(24, 6.0, GridScheme::Uniform).unwrap());
        let v = nalgebra::DVector::from_vec(grid.function_vector(|r| r * (-r * r / 2.0).exp()));
        let mut m = CMat::from_real(&v * v.transpose());
        m.im = (&v * v.transpose()).map(|x| x * 0.0);
        let blocks = vec![CMat::zeros(24), m];
        let tg = TensorGrid::new(6, 0.7).unwrap();
        let k = lift_blocks(&grid, &blocks, &tg);
        assert!(k.hermitian_defect() < 1e-14);
        let x = [0.3, -0.8, 1.1];
        let y = [-0.5, 0.4, 0.9];
        let (c, s) = (0.6f64.cos(), 0.6f64.sin());
        let rot = |p: [f64; 3]| [c * p[0] - s * p[1], s * p[0] + c * p[1], p[2]];
        let a = lift_pair(&grid, &blocks, x, y);
        let b = lift_pair(&grid, &blocks, rot(x), rot(y));
        assert!((a - b).norm() < 1e-12 * a.norm().max(1e-12));
    }
}
