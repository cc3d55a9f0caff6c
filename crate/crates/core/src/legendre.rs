//! Legendre polynomials, Gaunt coefficients and Legendre gap ratios.
//!
//! The Gaunt coefficient here is G(l, l', m) = ∫_{-1}^{1} P_l P_l' P_m dt.

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;
use crate::scalar::Scalar;

fn check_domain<T: Scalar>(t: T, what: &'static str) -> Result<()> {
    if !(t.abs() <= T::one()) {
        return Err(Error::Domain { what, value: t.to_f64().unwrap_or(f64::NAN) });
    }
    Ok(())
}

/// P_0(t), ..., P_lmax(t) by the three-term recurrence. No domain check.
pub fn legendre_all<T: Scalar>(lmax: usize, t: T) -> Vec<T> {
    let mut p = Vec::with_capacity(lmax + 1);
    p.push(T::one());
    if lmax >= 1 {
        p.push(t);
    }
    for k in 1..lmax {
        let kf = T::from_usize_exact(k);
        let next = ((kf + kf + T::one()) * t * p[k] - kf * p[k - 1]) / (kf + T::one());
        p.push(next);
    }
    p
}

/// P_l(t) for t in [-1, 1]. Clamped to [-1, 1], which the exact value satisfies.
pub fn legendre_eval<T: Scalar>(l: usize, t: T) -> Result<T> {
    check_domain(t, "legendre_eval")?;
    let v = legendre_all(l, t)[l];
    Ok(v.max(-T::one()).min(T::one()))
}

/// P_l'(t) for t in [-1, 1], via P'_{k+1} = P'_{k-1} + (2k+1) P_k.
pub fn legendre_deriv<T: Scalar>(l: usize, t: T) -> Result<T> {
    check_domain(t, "legendre_deriv")?;
    let lf = T::from_usize_exact(l);
    if t == T::one() {
        return Ok(lf * (lf + T::one()) * T::lit(0.5));
    }
    if t == -T::one() {
        let s = if l % 2 == 0 { -T::one() } else { T::one() };
        return Ok(s * lf * (lf + T::one()) * T::lit(0.5));
    }
    Ok(legendre_deriv_all(l, t)[l])
}

/// P_0'(t), ..., P_lmax'(t). No domain check.
pub fn legendre_deriv_all<T: Scalar>(lmax: usize, t: T) -> Vec<T> {
    let p = legendre_all(lmax, t);
    let mut d = vec![T::zero(); lmax + 1];
    if lmax >= 1 {
        d[1] = T::one();
    }
    for k in 1..lmax {
        let kf = T::from_usize_exact(k);
        d[k + 1] = d[k - 1] + (kf + kf + T::one()) * p[k];
    }
    d
}

/// Gaunt selection rules: even total degree and the triangle inequality.
pub fn gaunt_allowed(l1: usize, l2: usize, l3: usize) -> bool {
    (l1 + l2 + l3) % 2 == 0 && l3 <= l1 + l2 && l1 <= l2 + l3 && l2 <= l1 + l3
}

/// G(l1, l2, l3) by Gauss-Legendre quadrature that is exact for the integrand degree.
pub fn gaunt<T: Scalar>(l1: usize, l2: usize, l3: usize) -> Result<T> {
    if !gaunt_allowed(l1, l2, l3) {
        return Ok(T::zero());
    }
    let mut idx = [l1, l2, l3];
    idx.sort_unstable();
    let rule = GaussLegendre::<T>::new((l1 + l2 + l3) / 2 + 1)?;
    Ok(gaunt_with_rule(&rule, idx))
}

fn gaunt_with_rule<T: Scalar>(rule: &GaussLegendre<T>, sorted: [usize; 3]) -> T {
    let lmax = sorted[2];
    let mut acc = T::zero();
    for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
        let p = legendre_all(lmax, t);
        acc = acc + w * p[sorted[0]] * p[sorted[1]] * p[sorted[2]];
    }
    // |G| <= 2 holds exactly; rounding can overshoot at (0, 0, 0).
    acc.min(T::lit(2.0))
}

/// Dense table of G(l1, l2, l3) for all indices up to `max_degree`.
///
/// Entries violating the selection rules are stored as exact zeros and every
/// permutation of an index triple holds the same bits.
#[derive(Clone, Debug)]
pub struct GauntTable<T: Scalar = f64> {
    max_degree: usize,
    values: Vec<T>,
}

impl<T: Scalar> GauntTable<T> {
    pub fn new(max_degree: usize) -> Result<Self> {
        let d = max_degree + 1;
        let mut values = vec![T::zero(); d * d * d];
        let rule = GaussLegendre::<T>::new((3 * max_degree) / 2 + 1)?;
        for a in 0..d {
            for b in a..d {
                for c in b..d {
                    if !gaunt_allowed(a, b, c) {
                        continue;
                    }
                    let v = gaunt_with_rule(&rule, [a, b, c]);
                    for [i, j, k] in [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]] {
                        values[(i * d + j) * d + k] = v;
                    }
                }
            }
        }
        Ok(Self { max_degree, values })
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn get(&self, l1: usize, l2: usize, l3: usize) -> Result<T> {
        let d = self.max_degree;
        if l1 > d || l2 > d || l3 > d {
            return Err(Error::InvalidParameter(format!(
                "Gaunt index ({l1}, {l2}, {l3}) exceeds table degree {d}"
            )));
        }
        Ok(self.value(l1, l2, l3))
    }

    /// Unchecked lookup for hot loops; panics when out of range.
    #[inline]
    pub fn value(&self, l1: usize, l2: usize, l3: usize) -> T {
        let d = self.max_degree + 1;
        self.values[(l1 * d + l2) * d + l3]
    }

    /// Overwrite a single entry. Intended for fault-injection checks of validators.
    #[doc(hidden)]
    pub fn overwrite(&mut self, l1: usize, l2: usize, l3: usize, v: T) {
        let d = self.max_degree + 1;
        self.values[(l1 * d + l2) * d + l3] = v;
    }
}

/// sup over t in [-1, 1) of |P_l(t) - P_l'(t)| / (1 - t), sampled on Chebyshev points.
///
/// The value at t = 1 is the analytic limit |l(l+1) - l'(l'+1)| / 2.
pub fn gap_ratio<T: Scalar>(l: usize, lp: usize) -> T {
    gap_ratio_sampled(l, lp, 100_000)
}

pub fn gap_ratio_sampled<T: Scalar>(l: usize, lp: usize, samples: usize) -> T {
    if l == lp {
        return T::zero();
    }
    let lf = T::from_usize_exact(l);
    let lpf = T::from_usize_exact(lp);
    let mut best = (lf * (lf + T::one()) - lpf * (lpf + T::one())).abs() * T::lit(0.5);
    let lmax = l.max(lp);
    let nf = T::from_usize_exact(samples);
    for k in 0..samples {
        let theta = T::PI() * (T::from_usize_exact(k) + T::lit(0.5)) / nf;
        let t = theta.cos();
        let denom = T::one() - t;
        if denom <= T::zero() {
            continue;
        }
        let p = legendre_all(lmax, t);
        let r = (p[l] - p[lp]).abs() / denom;
        if r > best {
            best = r;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::adaptive_simpson;
    use proptest::prelude::*;

    #[test]
    fn low_degree_values() {
        assert_eq!(legendre_eval(3, 0.5f64).unwrap(), -0.4375);
        assert_eq!(legendre_eval(0, 0.3f64).unwrap(), 1.0);
        assert_eq!(legendre_eval(7, 1.0f64).unwrap(), 1.0);
        assert_eq!(legendre_eval(7, -1.0f64).unwrap(), -1.0);
        assert!(legendre_eval(2, 1.5f64).is_err());
        assert!(legendre_eval(2, f64::NAN).is_err());
    }

    #[test]
    fn derivative_at_endpoints() {
        assert_eq!(legendre_deriv(4, 1.0f64).unwrap(), 10.0);
        assert_eq!(legendre_deriv(4, -1.0f64).unwrap(), -10.0);
        assert_eq!(legendre_deriv(3, -1.0f64).unwrap(), 6.0);
        assert!(legendre_deriv(3, 1.0001f64).is_err());
    }

    #[test]
    fn gaunt_closed_forms() {
        let g = gaunt::<f64>(1, 1, 2).unwrap();
        assert!((g - 4.0 / 15.0).abs() < 1e-15);
        assert_eq!(gaunt::<f64>(1, 2, 2).unwrap(), 0.0);
        for l in 0..12 {
            let g = gaunt::<f64>(l, l, 0).unwrap();
            assert!((g - 2.0 / (2.0 * l as f64 + 1.0)).abs() < 1e-14);
        }
    }

    #[test]
    fn table_selection_rules_and_symmetry() {
        let t = GauntTable::<f64>::new(12).unwrap();
        for a in 0..=12 {
            for b in 0..=12 {
                for c in 0..=12 {
                    let v = t.value(a, b, c);
                    if !gaunt_allowed(a, b, c) {
                        assert_eq!(v, 0.0);
                    } else {
                        assert!(v > 0.0 && v <= 2.0, "({a},{b},{c}) {v}");
                    }
                    assert_eq!(v.to_bits(), t.value(c, a, b).to_bits());
                    assert_eq!(v.to_bits(), t.value(b, c, a).to_bits());
                    assert_eq!(v.to_bits(), t.value(b, a, c).to_bits());
                }
            }
        }
        assert!(t.get(13, 0, 0).is_err());
    }

    #[test]
    fn table_agrees_with_wigner_3j_product_formula() {
        // G(a,b,c) = 2 (3j symbol with zero projections)^2, closed form in factorials.
        fn three_j_sq(a: usize, b: usize, c: usize) -> f64 {
            let s = (a + b + c) / 2;
            let lf = |n: usize| (1..=n).map(|k| (k as f64).ln()).sum::<f64>();
            let ln = lf(2 * s - 2 * a) + lf(2 * s - 2 * b) + lf(2 * s - 2 * c) - lf(2 * s + 1)
                + 2.0 * (lf(s) - lf(s - a) - lf(s - b) - lf(s - c));
            ln.exp()
        }
        let t = GauntTable::<f64>::new(10).unwrap();
        for a in 0..=10 {
            for b in 0..=10 {
                for c in 0..=10 {
                    if gaunt_allowed(a, b, c) {
                        let exact = 2.0 * three_j_sq(a, b, c);
                        assert!((t.value(a, b, c) - exact).abs() < 1e-13, "({a},{b},{c})");
                    }
                }
            }
        }
    }

    #[test]
    fn gap_ratio_small_cases() {
        // For (0,1): (1 - t)/(1 - t) = 1 everywhere.
        assert!((gap_ratio::<f64>(0, 1) - 1.0).abs() < 1e-12);
        assert_eq!(gap_ratio::<f64>(3, 3), 0.0);
        for l in 0..=20usize {
            for lp in 0..=20usize {
                let b = ((1 + l + lp) * l.abs_diff(lp)) as f64;
                assert!(gap_ratio_sampled::<f64>(l, lp, 4000) <= b + 1e-12);
            }
        }
    }

    #[test]
    fn derivative_integral_identity() {
        // P_l'(x) = l(l+1)/(1-x^2) ∫_x^1 P_l(t) dt, checked for l <= 20.
        for l in 1..=20usize {
            for &x in &[-0.93f64, -0.4, 0.0, 0.27, 0.81] {
                let integral =
                    adaptive_simpson(|t: f64| legendre_eval(l, t).unwrap(), x, 1.0, 1e-14, 50).unwrap();
                let rhs = (l * (l + 1)) as f64 / (1.0 - x * x) * integral;
                let lhs = legendre_deriv(l, x).unwrap();
                assert!((lhs - rhs).abs() < 1e-9 * (1.0 + lhs.abs()), "l={l} x={x}");
            }
        }
    }

    #[test]
    fn generic_single_precision() {
        let v = legendre_eval(3, 0.5f32).unwrap();
        assert!((v + 0.4375).abs() < 1e-6);
        let g = gaunt::<f32>(1, 1, 2).unwrap();
        assert!((g - 4.0 / 15.0).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn bounded_by_one(l in 0usize..=30, t in -1.0f64..=1.0) {
            prop_assert!(legendre_eval(l, t).unwrap().abs() <= 1.0);
        }

        #[test]
        fn derivative_identity(l in 1usize..=30, t in -0.999f64..0.999) {
            // (1 - t^2) P_l' = l (P_{l-1} - t P_l)
            let p = legendre_all(l, t);
            let d = legendre_deriv(l, t).unwrap();
            let lhs = (1.0 - t * t) * d;
            let rhs = l as f64 * (p[l - 1] - t * p[l]);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + d.abs()));
        }

        #[test]
        fn gaunt_nonnegative_and_bounded(a in 0usize..=16, b in 0usize..=16, c in 0usize..=16) {
            let g = gaunt::<f64>(a, b, c).unwrap();
            prop_assert!(g >= 0.0 && g <= 2.0 + 1e-15);
            prop_assert_eq!(g == 0.0, !gaunt_allowed(a, b, c));
        }
    }
}
