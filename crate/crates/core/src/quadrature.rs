//! Gauss-Legendre rules and an adaptive Simpson integrator.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Gauss-Legendre rule on [-1, 1], nodes in ascending order.
#[derive(Clone, Debug)]
pub struct GaussLegendre<T: Scalar = f64> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Scalar> GaussLegendre<T> {
    /// Newton iteration on P_n from the Chebyshev-like initial guess.
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("Gauss-Legendre rule needs n >= 1".into()));
        }
        let mut nodes = vec![T::zero(); n];
        let mut weights = vec![T::zero(); n];
        let nf = T::from_usize_exact(n);
        let half = T::lit(0.5);
        let m = (n + 1) / 2;
        for i in 0..m {
            // i-th root from the top, x close to cos(pi (i + 3/4) / (n + 1/2))
            let guess = (T::PI() * (T::from_usize_exact(i) + T::lit(0.75)) / (nf + half)).cos();
            let mut x = guess;
            let mut dp = T::one();
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x = x - dx;
                if dx.abs() <= T::epsilon() * T::lit(2.0) {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d.is_finite() {
                dp = d;
            }
            let w = T::lit(2.0) / ((T::one() - x * x) * dp * dp);
            nodes[n - 1 - i] = x;
            nodes[i] = -x;
            weights[n - 1 - i] = w;
            weights[i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = T::zero();
        }
        Ok(Self { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped affinely onto [a, b].
    pub fn mapped(&self, a: T, b: T) -> (Vec<T>, Vec<T>) {
        let half = (b - a) * T::lit(0.5);
        let mid = (a + b) * T::lit(0.5);
        let x = self.nodes.iter().map(|&t| mid + half * t).collect();
        let w = self.weights.iter().map(|&w| w * half).collect();
        (x, w)
    }

    pub fn integrate<F: FnMut(T) -> T>(&self, a: T, b: T, mut f: F) -> T {
        let half = (b - a) * T::lit(0.5);
        let mid = (a + b) * T::lit(0.5);
        let mut acc = T::zero();
        for (&t, &w) in self.nodes.iter().zip(&self.weights) {
            acc = acc + w * f(mid + half * t);
        }
        acc * half
    }
}

fn legendre_with_derivative<T: Scalar>(n: usize, x: T) -> (T, T) {
    let mut p0 = T::one();
    let mut p1 = x;
    for k in 1..n {
        let kf = T::from_usize_exact(k);
        let p2 = ((kf + kf + T::one()) * x * p1 - kf * p0) / (kf + T::one());
        p0 = p1;
        p1 = p2;
    }
    let nf = T::from_usize_exact(n);
    let d = nf * (x * p1 - p0) / (x * x - T::one());
    (p1, d)
}

/// Adaptive Simpson integration with absolute tolerance `tol`.
pub fn adaptive_simpson<T: Scalar, F: FnMut(T) -> T>(mut f: F, a: T, b: T, tol: T, max_depth: usize) -> Result<T> {
    let fa = f(a);
    let fb = f(b);
    let m = (a + b) * T::lit(0.5);
    let fm = f(m);
    let whole = (b - a) / T::lit(6.0) * (fa + T::lit(4.0) * fm + fb);
    let mut failed = false;
    let v = simpson_rec(&mut f, a, b, fa, fm, fb, whole, tol, max_depth, &mut failed);
    if failed {
        return Err(Error::Quadrature(format!(
            "adaptive Simpson exceeded depth {max_depth} on [{:?}, {:?}]",
            a, b
        )));
    }
    Ok(v)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<T: Scalar, F: FnMut(T) -> T>(
    f: &mut F,
    a: T,
    b: T,
    fa: T,
    fm: T,
    fb: T,
    whole: T,
    tol: T,
    depth: usize,
    failed: &mut bool,
) -> T {
    let m = (a + b) * T::lit(0.5);
    let lm = (a + m) * T::lit(0.5);
    let rm = (m + b) * T::lit(0.5);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / T::lit(6.0) * (fa + T::lit(4.0) * flm + fm);
    let right = (b - m) / T::lit(6.0) * (fm + T::lit(4.0) * frm + fb);
    let diff = left + right - whole;
    if diff.abs() <= T::lit(15.0) * tol || (b - a).abs() <= T::epsilon() * (a.abs() + b.abs()) {
        return left + right + diff / T::lit(15.0);
    }
    if depth == 0 {
        *failed = true;
        return left + right;
    }
    let half_tol = tol * T::lit(0.5);
    simpson_rec(f, a, m, fa, flm, fm, left, half_tol, depth - 1, failed)
        + simpson_rec(f, m, b, fm, frm, fb, right, half_tol, depth - 1, failed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_point_rule_matches_closed_form() {
        let g = GaussLegendre::<f64>::new(3).unwrap();
        let x = (0.6f64).sqrt();
        assert!((g.nodes[0] + x).abs() < 1e-15);
        assert_eq!(g.nodes[1], 0.0);
        assert!((g.weights[0] - 5.0 / 9.0).abs() < 1e-15);
        assert!((g.weights[1] - 8.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn exact_on_polynomials_up_to_degree_2n_minus_1() {
        for n in 1..40 {
            let g = GaussLegendre::<f64>::new(n).unwrap();
            for k in 0..2 * n {
                let q = g.integrate(-1.0, 1.0, |x| x.powi(k as i32));
                let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "n={n} k={k} q={q}");
            }
        }
    }

    #[test]
    fn single_precision_rule() {
        let g = GaussLegendre::<f32>::new(8).unwrap();
        let s: f32 = g.weights.iter().sum();
        assert!((s - 2.0).abs() < 1e-5);
    }

    #[test]
    fn adaptive_simpson_handles_peaked_integrand() {
        let v = adaptive_simpson(|x: f64| 1.0 / (1e-4 + x * x), -1.0, 1.0, 1e-12, 60).unwrap();
        let exact = 2.0 / 1e-2 * (1.0f64 / 1e-2).atan();
        assert!((v - exact).abs() / exact < 1e-10);
    }
}
