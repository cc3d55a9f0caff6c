//! Two-body sector kernels F_{l,l'}(r, r') = 2π ∫_{-1}^{1} P_l(t) P_l'(t) V(|x - y|) dt.
//!
//! The Newton part is summed exactly from the multipole expansion. The w part
//! is integrated in s = |x - y|, where the integrand is smooth even at r = r'.
//!
//! Point samples of the Newton part have a kink on r = r', which caps the
//! accuracy of plain grid sums at O(N^-2). The tables used by the mean field
//! therefore carry product-integration weights for the Newton part: entry
//! (i, j) is ∬ θ_i(r) θ_j(r') r r' k(r, r') dr dr' / (r_i r_j dr_i dr_j) with θ
//! the grid's cardinal functions. Grid sums against r r' |g|² (odd in each
//! argument, so also well represented by the sine grid) are then exact up to
//! interpolation error. The point samples are kept for certification.

use crate::error::{Error, Result};
use crate::legendre::{gaunt_allowed, legendre_all};
use crate::potential::{PotentialSpec, WSpec};
use crate::quadrature::GaussLegendre;
use crate::radial::{GridScheme, RadialGrid};
use crate::GauntTable;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Newton part of F_{l,l'}: -2π Σ_m G(l, l', m) r_<^m / r_>^{m+1}.
pub fn newton_kernel(l: usize, lp: usize, r: f64, rp: f64, gaunt: &GauntTable) -> Result<f64> {
    if !(r > 0.0 && rp > 0.0) {
        return Err(Error::Domain { what: "newton_kernel radius", value: r.min(rp) });
    }
    if l + lp > gaunt.max_degree() || l.max(lp) > gaunt.max_degree() {
        return Err(Error::InvalidParameter(format!(
            "Gaunt table degree {} too small for ({l}, {lp})",
            gaunt.max_degree()
        )));
    }
    Ok(newton_unchecked(l, lp, r, rp, gaunt))
}

fn newton_unchecked(l: usize, lp: usize, r: f64, rp: f64, gaunt: &GauntTable) -> f64 {
    let (lo, hi) = if r < rp { (r, rp) } else { (rp, r) };
    let x = lo / hi;
    let mut acc = 0.0;
    let mut xm = x.powi(l.abs_diff(lp) as i32);
    for m in l.abs_diff(lp)..=l + lp {
        if gaunt_allowed(l, lp, m) {
            acc += gaunt.value(l, lp, m) * xm;
        }
        xm *= x;
    }
    -2.0 * PI * acc / hi
}

/// Panel quadrature in s for the w part, shared by every (l, l') of one table.
struct WQuadrature {
    rule: GaussLegendre,
    check: GaussLegendre,
    panel: f64,
}

impl WQuadrature {
    fn new(order: usize, w: &WSpec) -> Result<Self> {
        Ok(Self {
            rule: GaussLegendre::new(order)?,
            check: GaussLegendre::new(2 * order)?,
            panel: w.length_scale().max(1e-6),
        })
    }

    /// 2π ∫ P_a P_b w dt for every a, b <= lmax, returned as a (lmax+1)² row-major array.
    fn integrate(&self, w: &WSpec, lmax: usize, r: f64, rp: f64, rule: &GaussLegendre) -> Vec<f64> {
        let d = lmax + 1;
        let mut out = vec![0.0; d * d];
        let a = (r - rp).abs();
        let b = r + rp;
        let panels = (((b - a) / self.panel).ceil() as usize).clamp(1, 4096);
        let width = (b - a) / panels as f64;
        let inv = 1.0 / (r * rp);
        for k in 0..panels {
            let (xs, ws) = rule.mapped(a + width * k as f64, a + width * (k + 1) as f64);
            for (&s, &wq) in xs.iter().zip(&ws) {
                let t = ((r * r + rp * rp - s * s) * 0.5 * inv).clamp(-1.0, 1.0);
                let p = legendre_all(lmax, t);
                let f = 2.0 * PI * wq * w.value(s) * s * inv;
                for i in 0..d {
                    for j in i..d {
                        out[i * d + j] += f * p[i] * p[j];
                    }
                }
            }
        }
        for i in 0..d {
            for j in 0..i {
                out[i * d + j] = out[j * d + i];
            }
        }
        out
    }

    fn verified(&self, w: &WSpec, lmax: usize, r: f64, rp: f64, scale: f64) -> Result<Vec<f64>> {
        let v = self.integrate(w, lmax, r, rp, &self.rule);
        let c = self.integrate(w, lmax, r, rp, &self.check);
        for (x, y) in v.iter().zip(&c) {
            if (x - y).abs() > 1e-8 * x.abs().max(scale) {
                return Err(Error::Quadrature(format!(
                    "w-part kernel at r = {r}, r' = {rp} changed from {x} to {y} under order doubling"
                )));
            }
        }
        Ok(c)
    }
}

/// Product-integration matrices of r_<^m / r_>^{m+1} for m = 0..=mmax, see the module docs.
pub fn newton_product_weights(grid: &RadialGrid, mmax: usize) -> Result<Vec<DMatrix<f64>>> {
    let n = grid.len();
    let order = match grid.spec.scheme {
        GridScheme::LegendreMapped => n + mmax + 8,
        GridScheme::Uniform => 2 * n + 32,
    };
    let rule = GaussLegendre::new(order)?;
    let (outer, wo) = rule.mapped(0.0, grid.radius());
    let (t, wt) = rule.mapped(0.0, 1.0);
    let inner: Vec<f64> = outer.iter().flat_map(|&r| t.iter().map(move |&x| r * x)).collect();
    let theta_o = grid.cardinal_matrix(&outer);
    let theta_i = grid.cardinal_matrix(&inner);
    let q = order;
    let mut out = Vec::with_capacity(mmax + 1);
    for m in 0..=mmax {
        // A(p, j) = ∫_0^{r_p} r'^{m+1} θ_j(r') dr'
        let mut a = DMatrix::zeros(q, n);
        for p in 0..q {
            let rp = outer[p];
            for k in 0..q {
                let c = rp * wt[k] * (rp * t[k]).powi(m as i32 + 1);
                let row = theta_i.row(p * q + k);
                for j in 0..n {
                    a[(p, j)] += c * row[j];
                }
            }
        }
        let scaled = DMatrix::from_fn(q, n, |p, i| wo[p] * outer[p].powi(-(m as i32)) * theta_o[(p, i)]);
        let x = scaled.transpose() * a;
        let lw = &grid.line_weights;
        let r = &grid.points;
        out.push(DMatrix::from_fn(n, n, |i, j| (x[(i, j)] + x[(j, i)]) / (r[i] * r[j] * lw[i] * lw[j])));
    }
    Ok(out)
}

/// F_{l,l'} tables for l, l' <= Λ and multipole columns F_{m,0} for m <= 2Λ.
#[derive(Clone, Debug)]
pub struct KernelTable {
    pub lambda: usize,
    pub grid_id: u64,
    samples: Vec<DMatrix<f64>>,
    pairs: Vec<DMatrix<f64>>,
    multipoles: Vec<DMatrix<f64>>,
    exchange: Vec<DMatrix<f64>>,
}

fn pair_index(lambda: usize, l: usize, lp: usize) -> usize {
    let (a, b) = if l <= lp { (l, lp) } else { (lp, l) };
    a * (lambda + 1) + b
}

/// Normalization of the sector exchange block: X_l = Σ c (2l'+1)(2m+1) G F_{m0} ∘ g_l'.
pub const EXCHANGE_BLOCK_NORM: f64 = 1.0 / (8.0 * PI);

impl KernelTable {
    pub fn new(grid: &RadialGrid, potential: &PotentialSpec, gaunt: &GauntTable, lambda: usize) -> Result<Self> {
        let mdeg = 2 * lambda;
        if gaunt.max_degree() < mdeg {
            return Err(Error::InvalidParameter(format!(
                "Gaunt table degree {} below 2Λ = {mdeg}",
                gaunt.max_degree()
            )));
        }
        let n = grid.len();
        let d = lambda + 1;
        let mut pairs = vec![DMatrix::zeros(0, 0); d * d];
        for l in 0..d {
            for lp in l..d {
                pairs[pair_index(lambda, l, lp)] = DMatrix::zeros(n, n);
            }
        }
        let mut multipoles = vec![DMatrix::zeros(n, n); mdeg + 1];
        let mut samples = pairs.clone();
        let wq = if potential.w.is_zero() {
            None
        } else {
            Some(WQuadrature::new((4 * lambda + 8).max(16), &potential.w)?)
        };
        let bound_scale = 4.0 * PI * (1.0 + potential.sups.rw);
        for i in 0..n {
            for j in i..n {
                let (r, rp) = (grid.points[i], grid.points[j]);
                let wpart = match &wq {
                    Some(q) => Some(q.verified(&potential.w, mdeg, r, rp, bound_scale / r.max(rp) * 1e-3)?),
                    None => None,
                };
                let wval = |a: usize, b: usize| wpart.as_ref().map_or(0.0, |v| v[a * (mdeg + 1) + b]);
                for l in 0..d {
                    for lp in l..d {
                        let k = pair_index(lambda, l, lp);
                        let v = newton_unchecked(l, lp, r, rp, gaunt) + wval(l, lp);
                        samples[k][(i, j)] = v;
                        samples[k][(j, i)] = v;
                        pairs[k][(i, j)] = wval(l, lp);
                        pairs[k][(j, i)] = wval(l, lp);
                    }
                }
                for (m, mat) in multipoles.iter_mut().enumerate() {
                    mat[(i, j)] = wval(m, 0);
                    mat[(j, i)] = wval(m, 0);
                }
            }
        }
        // Newton part: F = -2π Σ_m G(l, l', m) r_<^m / r_>^{m+1}.
        let basis = newton_product_weights(grid, mdeg)?;
        for l in 0..d {
            for lp in l..d {
                let k = pair_index(lambda, l, lp);
                for (m, b) in basis.iter().enumerate() {
                    if gaunt_allowed(l, lp, m) {
                        pairs[k].zip_apply(b, |a, v| *a -= 2.0 * PI * gaunt.value(l, lp, m) * v);
                    }
                }
            }
        }
        for (m, mat) in multipoles.iter_mut().enumerate() {
            mat.zip_apply(&basis[m], |a, v| *a -= 2.0 * PI * gaunt.value(m, 0, m) * v);
        }
        let mut exchange = Vec::with_capacity(d * d);
        for l in 0..d {
            for lp in 0..d {
                let mut acc = DMatrix::zeros(n, n);
                for (m, f) in multipoles.iter().enumerate() {
                    if gaunt_allowed(l, lp, m) {
                        let c = EXCHANGE_BLOCK_NORM * (2 * lp + 1) as f64 * (2 * m + 1) as f64 * gaunt.value(l, lp, m);
                        acc.zip_apply(f, |a, b| *a += c * b);
                    }
                }
                exchange.push(acc);
            }
        }
        Ok(Self { lambda, grid_id: grid.id(), samples, pairs, multipoles, exchange })
    }

    /// Point samples F_{l,l'}(r_i, r_j), symmetric in (l, l') and in (i, j).
    pub fn pair_samples(&self, l: usize, lp: usize) -> &DMatrix<f64> {
        assert!(l <= self.lambda && lp <= self.lambda, "sector beyond cutoff");
        &self.samples[pair_index(self.lambda, l, lp)]
    }

    /// F_{l,l'} with product-integrated Newton part, as used in grid sums.
    pub fn pair(&self, l: usize, lp: usize) -> &DMatrix<f64> {
        assert!(l <= self.lambda && lp <= self.lambda, "sector beyond cutoff");
        &self.pairs[pair_index(self.lambda, l, lp)]
    }

    /// F_{m,0} for m <= 2Λ, product-integrated like `pair`.
    pub fn multipole(&self, m: usize) -> &DMatrix<f64> {
        &self.multipoles[m]
    }

    /// Combined exchange weight Σ_m c (2l'+1)(2m+1) G(l, l', m) F_{m,0}.
    pub fn exchange_weight(&self, l: usize, lp: usize) -> &DMatrix<f64> {
        &self.exchange[l * (self.lambda + 1) + lp]
    }
}

/// (V * ρ)(r_i) = Σ_j w_j F_{00}(r_i, r_j) ρ(r_j).
pub fn direct_potential(rho: &[f64], grid: &RadialGrid, table: &KernelTable) -> Result<Vec<f64>> {
    if rho.len() != grid.len() || table.grid_id != grid.id() {
        return Err(Error::GridMismatch("density and kernel table disagree on the grid".into()));
    }
    let f = table.pair(0, 0);
    let wr: Vec<f64> = rho.iter().zip(&grid.weights).map(|(p, w)| p * w).collect();
    Ok((0..grid.len())
        .map(|i| (0..grid.len()).map(|j| f[(i, j)] * wr[j]).sum())
        .collect())
}

/// F_{l,l'}(r, r') at arbitrary radii, Newton sum plus verified w quadrature.
pub fn kernel_at(l: usize, lp: usize, r: f64, rp: f64, potential: &PotentialSpec, gaunt: &GauntTable) -> Result<f64> {
    Ok(newton_kernel(l, lp, r, rp, gaunt)? + w_kernel_at(l, lp, r, rp, potential)?)
}

fn w_kernel_at(l: usize, lp: usize, r: f64, rp: f64, potential: &PotentialSpec) -> Result<f64> {
    if potential.w.is_zero() {
        return Ok(0.0);
    }
    let lmax = l.max(lp);
    let q = WQuadrature::new((2 * (l + lp) + 8).max(16), &potential.w)?;
    let scale = 4.0 * PI * (1.0 + potential.sups.rw) / r.max(rp) * 1e-3;
    let v = q.verified(&potential.w, lmax, r, rp, scale)?;
    Ok(v[l * (lmax + 1) + lp])
}

/// (V * ρ)(r) at an arbitrary radius, with the Newton part product-integrated
/// against the interpolated r ρ.
pub fn direct_potential_at(r: f64, rho: &[f64], grid: &RadialGrid, potential: &PotentialSpec, gaunt: &GauntTable) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Domain { what: "direct_potential_at radius", value: r });
    }
    let _ = gaunt;
    let n = grid.len();
    let order = match grid.spec.scheme {
        GridScheme::LegendreMapped => n + 8,
        GridScheme::Uniform => 2 * n + 32,
    };
    let rule = GaussLegendre::new(order)?;
    let radius = grid.radius();
    let (xa, wa) = rule.mapped(0.0, r.min(radius));
    let mut nodes = xa.clone();
    let mut weights: Vec<f64> = wa.iter().zip(&xa).map(|(w, x)| w * x / r).collect();
    if r < radius {
        let (xb, wb) = rule.mapped(r, radius);
        weights.extend(wb.iter().copied());
        nodes.extend(xb);
    }
    let theta = grid.cardinal_matrix(&nodes);
    let mut acc = 0.0;
    for (j, (&rj, &pj)) in grid.points.iter().zip(rho).enumerate() {
        let col: f64 = (0..nodes.len()).map(|p| weights[p] * theta[(p, j)]).sum();
        acc -= 4.0 * PI * rj * pj * col;
        if !potential.w.is_zero() {
            acc += grid.weights[j] * pj * w_kernel_at(0, 0, r, rj, potential)?;
        }
    }
    Ok(acc)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KernelBoundReport {
    pub lambda: usize,
    pub grid_points: usize,
    /// max |F| max(r, r') / (4π (1 + sup r|w|)); at most 1.
    pub decay_ratio: f64,
    pub decay_holds: bool,
    /// max |r² ∂_r F_newton| / (1 + l² + l'²).
    pub derivative_constant: f64,
    /// max |r² ∂_r F_w| / sup (1+r²)^{1+ε}|w'|, zero when w = 0.
    pub derivative_constant_w: f64,
}

fn radial_derivative_rows(m: &DMatrix<f64>, x: &[f64], i: usize, j: usize) -> f64 {
    let n = x.len();
    if i == 0 {
        (m[(1, j)] - m[(0, j)]) / (x[1] - x[0])
    } else if i == n - 1 {
        (m[(n - 1, j)] - m[(n - 2, j)]) / (x[n - 1] - x[n - 2])
    } else {
        let (h0, h1) = (x[i] - x[i - 1], x[i + 1] - x[i]);
        (-h1 / (h0 * (h0 + h1))) * m[(i - 1, j)] + ((h1 - h0) / (h0 * h1)) * m[(i, j)]
            + (h0 / (h1 * (h0 + h1))) * m[(i + 1, j)]
    }
}

/// Check the decay bound and fit the derivative constants on one grid.
pub fn verify_kernel_bounds(table: &KernelTable, grid: &RadialGrid, potential: &PotentialSpec, gaunt: &GauntTable) -> Result<KernelBoundReport> {
    if table.grid_id != grid.id() {
        return Err(Error::GridMismatch("kernel table built on another grid".into()));
    }
    let n = grid.len();
    let x = &grid.points;
    let bound = 4.0 * PI * (1.0 + potential.sups.rw);
    let mut decay: f64 = 0.0;
    let mut dconst: f64 = 0.0;
    let mut dconst_w: f64 = 0.0;
    for l in 0..=table.lambda {
        for lp in l..=table.lambda {
            let f = table.pair_samples(l, lp);
            let newton = DMatrix::from_fn(n, n, |i, j| newton_unchecked(l, lp, x[i], x[j], gaunt));
            let wpart = f - &newton;
            let poly = (1 + l * l + lp * lp) as f64;
            for i in 0..n {
                for j in 0..n {
                    decay = decay.max(f[(i, j)].abs() * x[i].max(x[j]) / bound);
                    let r2 = x[i] * x[i];
                    dconst = dconst.max(r2 * radial_derivative_rows(&newton, x, i, j).abs() / poly);
                    if potential.sups.wprime > 0.0 {
                        dconst_w = dconst_w
                            .max(r2 * radial_derivative_rows(&wpart, x, i, j).abs() / potential.sups.wprime);
                    }
                }
            }
        }
    }
    Ok(KernelBoundReport {
        lambda: table.lambda,
        grid_points: n,
        decay_ratio: decay,
        decay_holds: decay <= 1.0 + 1e-12,
        derivative_constant: dconst,
        derivative_constant_w: dconst_w,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::adaptive_simpson;
    use crate::radial::{build_grid, GridScheme};

    #[test]
    fn monopole_is_minus_four_pi_over_max() {
        let g = GauntTable::new(4).unwrap();
        let v = newton_kernel(0, 0, 1.0, 2.0, &g).unwrap();
        assert!((v + 2.0 * PI).abs() < 1e-14);
        assert!(newton_kernel(0, 0, 0.0, 1.0, &g).is_err());
    }

    #[test]
    fn newton_sum_matches_angular_quadrature() {
        let g = GauntTable::new(8).unwrap();
        for (l, lp) in [(0, 0), (1, 0), (1, 1), (2, 1), (3, 2), (4, 4)] {
            for &(r, rp) in &[(0.3, 1.7), (2.0, 2.0), (1.1, 0.4), (5.0, 4.9)] {
                // substitute s = |x - y| so the integrand is smooth
                let f = |s: f64| {
                    let t = ((r * r + rp * rp - s * s) / (2.0 * r * rp)).clamp(-1.0, 1.0);
                    let p = legendre_all(l.max(lp), t);
                    -p[l] * p[lp] / (r * rp)
                };
                let q = 2.0 * PI * adaptive_simpson(f, (r - rp).abs(), r + rp, 1e-13, 50).unwrap();
                let v = newton_kernel(l, lp, r, rp, &g).unwrap();
                assert!((v - q).abs() <= 1e-9 * v.abs().max(1e-3), "({l},{lp}) r={r} r'={rp}: {v} vs {q}");
            }
        }
    }

    #[test]
    fn table_symmetry_and_decay() {
        let grid = build_grid(24, 6.0, GridScheme::Uniform).unwrap();
        let gaunt = GauntTable::new(8).unwrap();
        let p = PotentialSpec::new(1.0, 0.0, WSpec::Gaussian { strength: 0.3, width: 1.0 }, 0.5, 12.0).unwrap();
        let t = KernelTable::new(&grid, &p, &gaunt, 2).unwrap();
        assert_eq!(t.pair(0, 1), t.pair(1, 0));
        for l in 0..=2 {
            let f = t.pair(l, l);
            assert_eq!(f, &f.transpose());
        }
        let rep = verify_kernel_bounds(&t, &grid, &p, &gaunt).unwrap();
        assert!(rep.decay_holds, "{rep:?}");
    }

    #[test]
    fn multipole_identity_recovers_pair_kernels() {
        // F_{l l'} = Σ_m (2m+1)/2 G(l,l',m) F_{m0}
        let grid = build_grid(16, 5.0, GridScheme::LegendreMapped).unwrap();
        let gaunt = GauntTable::new(8).unwrap();
        let p = PotentialSpec::new(1.0, 0.0, WSpec::YukawaScreened { strength: 0.4, screening: 1.5 }, 0.5, 10.0).unwrap();
        let t = KernelTable::new(&grid, &p, &gaunt, 2).unwrap();
        for l in 0..=2 {
            for lp in 0..=2 {
                let mut acc = DMatrix::zeros(16, 16);
                for m in 0..=4 {
                    acc += t.multipole(m) * ((2 * m + 1) as f64 / 2.0 * gaunt.value(l, lp, m));
                }
                let err = (&acc - t.pair(l, lp)).amax();
                assert!(err < 1e-9 * t.pair(l, lp).amax(), "({l},{lp}) {err}");
            }
        }
    }

    #[test]
    fn direct_potential_of_gaussian_matches_closed_form() {
        let gaunt = GauntTable::new(0).unwrap();
        let p = PotentialSpec::newton(1.0, 0.0, 20.0).unwrap();
        for scheme in [GridScheme::LegendreMapped, GridScheme::Uniform] {
            let grid = build_grid(48, 8.0, scheme).unwrap();
            let t = KernelTable::new(&grid, &p, &gaunt, 0).unwrap();
            let rho: Vec<f64> = grid.points.iter().map(|&r| (-r * r).exp()).collect();
            let exact = |r: f64| -PI.powf(1.5) * libm_erf(r) / r;
            let v = direct_potential(&rho, &grid, &t).unwrap();
            // ∬ e^{-x²} e^{-y²} / |x - y| = √2 π^{5/2}
            let e: f64 = (0..grid.len()).map(|i| 4.0 * PI * grid.weights[i] * rho[i] * v[i]).sum();
            assert!((e + 2f64.sqrt() * PI.powf(2.5)).abs() < 1e-9, "{scheme:?} {e}");
            if scheme == GridScheme::LegendreMapped {
                for (i, &r) in grid.points.iter().enumerate() {
                    assert!((v[i] - exact(r)).abs() < 1e-6, "r={r}: {} vs {}", v[i], exact(r));
                }
            }
            for r in [0.05, 0.7, 2.3, 7.9] {
                let at = direct_potential_at(r, &rho, &grid, &p, &gaunt).unwrap();
                assert!((at - exact(r)).abs() < 1e-6, "{scheme:?} r={r}: {at} vs {}", exact(r));
            }
        }
    }

    fn libm_erf(x: f64) -> f64 {
        // erf by its Maclaurin series; fine for |x| <= 8 in f64 with enough terms
        let mut term = x;
        let mut sum: f64 = x;
        for k in 1..200 {
            term *= -x * x / k as f64;
            sum += term / (2 * k + 1) as f64;
        }
        if x > 5.0 {
            return 1.0;
        }
        2.0 / PI.sqrt() * sum
    }
}
