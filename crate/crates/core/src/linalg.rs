//! Complex matrices stored as separate real and imaginary parts.
//!
//! Products go through real GEMM, which is far faster than the generic complex
//! kernel for the sizes used here.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use std::ops::{Add, AddAssign, Neg, Sub, SubAssign};

#[derive(Clone, Debug, PartialEq)]
pub struct CMat {
    pub re: DMatrix<f64>,
    pub im: DMatrix<f64>,
}

fn is_zero(m: &DMatrix<f64>) -> bool {
    m.iter().all(|&x| x == 0.0)
}

impl CMat {
    pub fn zeros(n: usize) -> Self {
        Self { re: DMatrix::zeros(n, n), im: DMatrix::zeros(n, n) }
    }

    pub fn identity(n: usize) -> Self {
        Self { re: DMatrix::identity(n, n), im: DMatrix::zeros(n, n) }
    }

    pub fn from_real(re: DMatrix<f64>) -> Self {
        let (r, c) = re.shape();
        Self { re, im: DMatrix::zeros(r, c) }
    }

    pub fn from_parts(re: DMatrix<f64>, im: DMatrix<f64>) -> Self {
        assert_eq!(re.shape(), im.shape());
        Self { re, im }
    }

    pub fn from_complex(m: &DMatrix<Complex64>) -> Self {
        Self { re: m.map(|z| z.re), im: m.map(|z| z.im) }
    }

    pub fn to_complex(&self) -> DMatrix<Complex64> {
        self.re.zip_map(&self.im, Complex64::new)
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        Self::from_real(DMatrix::from_diagonal(&DVector::from_column_slice(d)))
    }

    pub fn nrows(&self) -> usize {
        self.re.nrows()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.re.shape()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(self.re[(i, j)], self.im[(i, j)])
    }

    pub fn set(&mut self, i: usize, j: usize, z: Complex64) {
        self.re[(i, j)] = z.re;
        self.im[(i, j)] = z.im;
    }

    pub fn is_real(&self) -> bool {
        is_zero(&self.im)
    }

    pub fn mul(&self, other: &CMat) -> CMat {
        let a_real = is_zero(&self.im);
        let b_real = is_zero(&other.im);
        let re = if a_real || b_real {
            &self.re * &other.re
        } else {
            let mut re = &self.re * &other.re;
            re.gemm(-1.0, &self.im, &other.im, 1.0);
            re
        };
        let im = match (a_real, b_real) {
            (true, true) => DMatrix::zeros(re.nrows(), re.ncols()),
            (true, false) => &self.re * &other.im,
            (false, true) => &self.im * &other.re,
            (false, false) => {
                let mut im = &self.re * &other.im;
                im.gemm(1.0, &self.im, &other.re, 1.0);
                im
            }
        };
        CMat { re, im }
    }

    /// Real matrix times self.
    pub fn left_mul_real(&self, a: &DMatrix<f64>) -> CMat {
        CMat { re: a * &self.re, im: a * &self.im }
    }

    /// Self times real matrix.
    pub fn right_mul_real(&self, b: &DMatrix<f64>) -> CMat {
        CMat { re: &self.re * b, im: &self.im * b }
    }

    pub fn adjoint(&self) -> CMat {
        CMat { re: self.re.transpose(), im: -self.im.transpose() }
    }

    pub fn transpose(&self) -> CMat {
        CMat { re: self.re.transpose(), im: self.im.transpose() }
    }

    pub fn conj(&self) -> CMat {
        CMat { re: self.re.clone(), im: -&self.im }
    }

    pub fn scale(&self, s: f64) -> CMat {
        CMat { re: &self.re * s, im: &self.im * s }
    }

    pub fn scale_c(&self, z: Complex64) -> CMat {
        CMat {
            re: &self.re * z.re - &self.im * z.im,
            im: &self.re * z.im + &self.im * z.re,
        }
    }

    /// Multiply by -i.
    pub fn mul_neg_i(&self) -> CMat {
        CMat { re: self.im.clone(), im: -&self.re }
    }

    /// Multiply by i.
    pub fn mul_i(&self) -> CMat {
        CMat { re: -&self.im, im: self.re.clone() }
    }

    /// Entrywise product with a real matrix.
    pub fn hadamard_real(&self, f: &DMatrix<f64>) -> CMat {
        CMat { re: self.re.component_mul(f), im: self.im.component_mul(f) }
    }

    /// self += s * f ∘ other, entrywise.
    pub fn add_hadamard_scaled(&mut self, s: f64, f: &DMatrix<f64>, other: &CMat) {
        for ((d, &fv), &o) in self.re.iter_mut().zip(f.iter()).zip(other.re.iter()) {
            *d += s * fv * o;
        }
        for ((d, &fv), &o) in self.im.iter_mut().zip(f.iter()).zip(other.im.iter()) {
            *d += s * fv * o;
        }
    }

    pub fn axpy(&mut self, s: f64, other: &CMat) {
        self.re.zip_apply(&other.re, |a, b| *a += s * b);
        self.im.zip_apply(&other.im, |a, b| *a += s * b);
    }

    pub fn add_diagonal(&mut self, d: &[f64]) {
        for (i, v) in d.iter().enumerate() {
            self.re[(i, i)] += v;
        }
    }

    pub fn trace(&self) -> Complex64 {
        Complex64::new(self.re.trace(), self.im.trace())
    }

    /// Tr(self * other) without forming the product.
    pub fn trace_product(&self, other: &CMat) -> Complex64 {
        let n = self.nrows();
        let mut re = 0.0;
        let mut im = 0.0;
        for i in 0..n {
            for k in 0..n {
                let (ar, ai) = (self.re[(i, k)], self.im[(i, k)]);
                let (br, bi) = (other.re[(k, i)], other.im[(k, i)]);
                re += ar * br - ai * bi;
                im += ar * bi + ai * br;
            }
        }
        Complex64::new(re, im)
    }

    /// Frobenius inner product Σ conj(self_ij) other_ij.
    pub fn inner(&self, other: &CMat) -> Complex64 {
        let re = self.re.dot(&other.re) + self.im.dot(&other.im);
        let im = self.re.dot(&other.im) - self.im.dot(&other.re);
        Complex64::new(re, im)
    }

    pub fn norm_sq(&self) -> f64 {
        self.re.norm_squared() + self.im.norm_squared()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.re
            .iter()
            .zip(self.im.iter())
            .map(|(a, b)| a.hypot(*b))
            .fold(0.0, f64::max)
    }

    pub fn hermitian_part(&self) -> CMat {
        let a = self.adjoint();
        CMat { re: (&self.re + &a.re) * 0.5, im: (&self.im + &a.im) * 0.5 }
    }

    pub fn antisymmetric_part(&self) -> CMat {
        let t = self.transpose();
        CMat { re: (&self.re - &t.re) * 0.5, im: (&self.im - &t.im) * 0.5 }
    }

    /// max |M - M^*| entrywise.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.nrows();
        let mut d: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let a = self.re[(i, j)] - self.re[(j, i)];
                let b = self.im[(i, j)] + self.im[(j, i)];
                d = d.max(a.hypot(b));
            }
        }
        d
    }

    /// max |M + M^T| entrywise.
    pub fn antisymmetry_defect(&self) -> f64 {
        let n = self.nrows();
        let mut d: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let a = self.re[(i, j)] + self.re[(j, i)];
                let b = self.im[(i, j)] + self.im[(j, i)];
                d = d.max(a.hypot(b));
            }
        }
        d
    }

    /// Eigen-decomposition of the hermitian part: ascending eigenvalues and unitary U.
    pub fn hermitian_eigen(&self) -> (Vec<f64>, CMat) {
        let h = self.hermitian_part();
        if h.is_real() {
            let e = SymmetricEigen::new(h.re);
            let mut order: Vec<usize> = (0..e.eigenvalues.len()).collect();
            order.sort_by(|&a, &b| e.eigenvalues[a].total_cmp(&e.eigenvalues[b]));
            let vals = order.iter().map(|&i| e.eigenvalues[i]).collect();
            let u = DMatrix::from_fn(e.eigenvectors.nrows(), order.len(), |r, c| e.eigenvectors[(r, order[c])]);
            return (vals, CMat::from_real(u));
        }
        let e = SymmetricEigen::new(h.to_complex());
        let mut order: Vec<usize> = (0..e.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| e.eigenvalues[a].total_cmp(&e.eigenvalues[b]));
        let vals = order.iter().map(|&i| e.eigenvalues[i]).collect();
        let u = DMatrix::from_fn(e.eigenvectors.nrows(), order.len(), |r, c| e.eigenvectors[(r, order[c])]);
        (vals, CMat::from_complex(&u))
    }

    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let h = self.hermitian_part();
        let mut v: Vec<f64> = if h.is_real() {
            SymmetricEigen::new(h.re).eigenvalues.iter().copied().collect()
        } else {
            SymmetricEigen::new(h.to_complex()).eigenvalues.iter().copied().collect()
        };
        v.sort_by(f64::total_cmp);
        v
    }

    /// f(M) for hermitian M through its spectral decomposition.
    pub fn hermitian_function<F: Fn(f64) -> f64>(&self, f: F) -> CMat {
        let (vals, u) = self.hermitian_eigen();
        let fd: Vec<f64> = vals.iter().map(|&x| f(x)).collect();
        let scaled = CMat {
            re: DMatrix::from_fn(u.nrows(), u.nrows(), |r, c| u.re[(r, c)] * fd[c]),
            im: DMatrix::from_fn(u.nrows(), u.nrows(), |r, c| u.im[(r, c)] * fd[c]),
        };
        scaled.mul(&u.adjoint())
    }

    /// Largest singular value.
    pub fn spectral_norm(&self) -> f64 {
        let g = self.adjoint().mul(self);
        g.hermitian_eigenvalues().last().copied().unwrap_or(0.0).max(0.0).sqrt()
    }
}

/// Spectral function of a real symmetric matrix.
pub fn symmetric_function<F: Fn(f64) -> f64>(m: &DMatrix<f64>, f: F) -> DMatrix<f64> {
    let e = SymmetricEigen::new(m.clone());
    let v = &e.eigenvectors;
    let fd: Vec<f64> = e.eigenvalues.iter().map(|&x| f(x)).collect();
    let scaled = DMatrix::from_fn(v.nrows(), v.ncols(), |r, c| v[(r, c)] * fd[c]);
    let mut out = &scaled * v.transpose();
    let t = out.transpose();
    out += t;
    out *= 0.5;
    out
}

impl Add for &CMat {
    type Output = CMat;
    fn add(self, o: &CMat) -> CMat {
        CMat { re: &self.re + &o.re, im: &self.im + &o.im }
    }
}

impl Sub for &CMat {
    type Output = CMat;
    fn sub(self, o: &CMat) -> CMat {
        CMat { re: &self.re - &o.re, im: &self.im - &o.im }
    }
}

impl Neg for &CMat {
    type Output = CMat;
    fn neg(self) -> CMat {
        CMat { re: -&self.re, im: -&self.im }
    }
}

impl AddAssign<&CMat> for CMat {
    fn add_assign(&mut self, o: &CMat) {
        self.re += &o.re;
        self.im += &o.im;
    }
}

impl SubAssign<&CMat> for CMat {
    fn sub_assign(&mut self, o: &CMat) {
        self.re -= &o.re;
        self.im -= &o.im;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, rng: &mut ChaCha8Rng) -> CMat {
        CMat {
            re: DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0)),
            im: DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0)),
        }
    }

    #[test]
    fn product_matches_native_complex() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random(7, &mut rng);
        let b = random(7, &mut rng);
        let p = a.mul(&b).to_complex();
        let q = a.to_complex() * b.to_complex();
        assert!((p - &q).norm() < 1e-13);
        assert!((a.trace_product(&b) - q.trace()).norm() < 1e-13);
    }

    #[test]
    fn eigen_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let h = random(6, &mut rng).hermitian_part();
        let back = h.hermitian_function(|x| x);
        assert!((&back - &h).max_abs() < 1e-12);
        let sq = h.hermitian_function(|x| x * x);
        assert!((&sq - &h.mul(&h)).max_abs() < 1e-12);
    }

    #[test]
    fn spectral_norm_of_diagonal() {
        let d = CMat::from_diagonal(&[1.0, -3.0, 2.0]);
        assert!((d.spectral_norm() - 3.0).abs() < 1e-12);
    }
}
