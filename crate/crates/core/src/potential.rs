//! Interaction V(x) = -1/|x| + w(|x|) and its sup-functionals.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Smooth correction w added to the attractive Newton kernel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "kebab-case")]
pub enum WSpec {
    /// w = 0.
    Newton,
    /// w(r) = c (1 - exp(-λ r)) / r.
    YukawaScreened { strength: f64, screening: f64 },
    /// w(r) = c exp(-r² / σ²).
    Gaussian { strength: f64, width: f64 },
}

impl WSpec {
    pub fn is_zero(&self) -> bool {
        match self {
            WSpec::Newton => true,
            WSpec::YukawaScreened { strength, .. } | WSpec::Gaussian { strength, .. } => *strength == 0.0,
        }
    }

    pub fn value(&self, r: f64) -> f64 {
        match *self {
            WSpec::Newton => 0.0,
            WSpec::YukawaScreened { strength: c, screening: l } => {
                if r == 0.0 {
                    c * l
                } else {
                    -c * (-l * r).exp_m1() / r
                }
            }
            WSpec::Gaussian { strength: c, width: s } => c * (-(r * r) / (s * s)).exp(),
        }
    }

    pub fn derivative(&self, r: f64) -> f64 {
        match *self {
            WSpec::Newton => 0.0,
            WSpec::YukawaScreened { strength: c, screening: l } => {
                let x = l * r;
                if x < 1e-3 {
                    // series of (x e^{-x} - (1 - e^{-x})) / x² times λ²
                    c * l * l * (-0.5 + x / 3.0 - x * x / 8.0 + x * x * x / 30.0)
                } else {
                    c * (x * (-x).exp() + (-x).exp_m1()) / (r * r)
                }
            }
            WSpec::Gaussian { strength: c, width: s } => -2.0 * c * r / (s * s) * (-(r * r) / (s * s)).exp(),
        }
    }

    /// Length over which w varies appreciably, used to size quadrature panels.
    pub fn length_scale(&self) -> f64 {
        match *self {
            WSpec::Newton => f64::INFINITY,
            WSpec::YukawaScreened { screening, .. } => 1.0 / screening.abs().max(1e-12),
            WSpec::Gaussian { width, .. } => width.abs(),
        }
    }

    /// Closed-form sup r|w| and sup (w + r w')_- where available.
    pub fn closed_form_sups(&self) -> (Option<f64>, Option<f64>) {
        match *self {
            WSpec::Newton => (Some(0.0), Some(0.0)),
            WSpec::YukawaScreened { strength: c, screening: l } => {
                // (r w)' = c λ e^{-λ r}
                (Some(c.abs()), Some(if c < 0.0 { -c * l } else { 0.0 }))
            }
            WSpec::Gaussian { strength: c, width: s } => {
                let rw = c.abs() * s / (2.0 * std::f64::consts::E).sqrt();
                // w + r w' = c e^{-u}(1 - 2u), u = r²/σ², minimum -2 e^{-3/2} at u = 3/2
                let neg = if c >= 0.0 { 2.0 * c * (-1.5f64).exp() } else { -c };
                (Some(rw), Some(neg))
            }
        }
    }
}

/// Sampling points for sup-functionals on (0, domain].
fn sample_points(domain: f64) -> impl Iterator<Item = f64> {
    let n_log = 4000;
    let n_lin = 20000;
    let lo = (domain * 1e-8).ln();
    let hi = domain.ln();
    (0..=n_log)
        .map(move |k| (lo + (hi - lo) * k as f64 / n_log as f64).exp())
        .chain((1..=n_lin).map(move |k| domain * k as f64 / n_lin as f64))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupFunctionals {
    /// sup r |w(r)|
    pub rw: f64,
    /// sup (1 + r²)^{1+ε} |w'(r)|
    pub wprime: f64,
    /// sup (w + r w')_-
    pub neg: f64,
}

pub fn sampled_sups(w: &WSpec, epsilon: f64, domain: f64) -> SupFunctionals {
    let mut s = SupFunctionals { rw: 0.0, wprime: 0.0, neg: 0.0 };
    for r in sample_points(domain) {
        let v = w.value(r);
        let d = w.derivative(r);
        s.rw = s.rw.max(r * v.abs());
        s.wprime = s.wprime.max((1.0 + r * r).powf(1.0 + epsilon) * d.abs());
        s.neg = s.neg.max(-(v + r * d));
    }
    s
}

/// Interaction parameters with validated assumptions on w.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub coupling: f64,
    pub mass: f64,
    pub epsilon: f64,
    pub w: WSpec,
    /// Radius of the region over which the sup-functionals were taken.
    pub domain: f64,
    pub sups: SupFunctionals,
}

impl PotentialSpec {
    /// `domain` is the largest |x - y| that occurs, twice the box radius.
    pub fn new(coupling: f64, mass: f64, w: WSpec, epsilon: f64, domain: f64) -> Result<Self> {
        if !(coupling >= 0.0 && coupling.is_finite()) {
            return Err(Error::InvalidParameter(format!("coupling must be >= 0, got {coupling}")));
        }
        if !(mass >= 0.0 && mass.is_finite()) {
            return Err(Error::InvalidParameter(format!("mass must be >= 0, got {mass}")));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!("epsilon must be > 0, got {epsilon}")));
        }
        if !(domain > 0.0 && domain.is_finite()) {
            return Err(Error::InvalidParameter(format!("domain must be > 0, got {domain}")));
        }
        match w {
            WSpec::YukawaScreened { strength, screening } if !(screening > 0.0) || !strength.is_finite() => {
                return Err(Error::PotentialAssumption(format!(
                    "yukawa-screened needs screening > 0, got {screening}"
                )));
            }
            WSpec::Gaussian { strength, width } if !(width > 0.0) || !strength.is_finite() => {
                return Err(Error::PotentialAssumption(format!("gaussian needs width > 0, got {width}")));
            }
            _ => {}
        }
        let mut sups = sampled_sups(&w, epsilon, domain);
        let (rw, neg) = w.closed_form_sups();
        if let Some(rw) = rw {
            sups.rw = sups.rw.max(rw);
        }
        if let Some(neg) = neg {
            sups.neg = sups.neg.max(neg);
        }
        if !(sups.rw.is_finite() && sups.wprime.is_finite() && sups.neg.is_finite()) {
            return Err(Error::PotentialAssumption("non-finite sup-functional for w".into()));
        }
        Ok(Self { coupling, mass, epsilon, w, domain, sups })
    }

    pub fn newton(coupling: f64, mass: f64, domain: f64) -> Result<Self> {
        Self::new(coupling, mass, WSpec::Newton, 0.5, domain)
    }

    pub fn with_coupling(&self, coupling: f64) -> Result<Self> {
        if !(coupling >= 0.0 && coupling.is_finite()) {
            return Err(Error::InvalidParameter(format!("coupling must be >= 0, got {coupling}")));
        }
        Ok(Self { coupling, ..self.clone() })
    }

    /// V(r) = -1/r + w(r).
    pub fn value(&self, r: f64) -> f64 {
        -1.0 / r + self.w.value(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn newton_sups_vanish() {
        let p = PotentialSpec::newton(1.0, 0.0, 20.0).unwrap();
        assert_eq!(p.sups, SupFunctionals { rw: 0.0, wprime: 0.0, neg: 0.0 });
    }

    #[test]
    fn closed_forms_match_dense_sampling() {
        for w in [
            WSpec::YukawaScreened { strength: -0.3, screening: 2.0 },
            WSpec::YukawaScreened { strength: 0.4, screening: 0.5 },
            WSpec::Gaussian { strength: 0.7, width: 1.3 },
            WSpec::Gaussian { strength: -0.2, width: 0.8 },
        ] {
            let s = sampled_sups(&w, 0.5, 400.0);
            let (rw, neg) = w.closed_form_sups();
            assert!((s.rw - rw.unwrap()).abs() < 1e-3 * (1.0 + rw.unwrap()), "{w:?}");
            assert!((s.neg - neg.unwrap()).abs() < 1e-4 * (1.0 + neg.unwrap()), "{w:?}");
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        for w in [
            WSpec::YukawaScreened { strength: 0.5, screening: 1.5 },
            WSpec::Gaussian { strength: 0.5, width: 1.1 },
        ] {
            for &r in &[1e-5, 1e-3, 0.2, 1.0, 3.7] {
                let h = 1e-6 * (1.0 + r);
                let fd = (w.value(r + h) - w.value(r - h)) / (2.0 * h);
                assert!((fd - w.derivative(r)).abs() < 1e-6, "{w:?} r={r}");
            }
        }
    }

    #[test]
    fn rejects_invalid_parameters() {
        assert!(PotentialSpec::newton(-1.0, 0.0, 1.0).is_err());
        assert!(PotentialSpec::new(1.0, 0.0, WSpec::Gaussian { strength: 1.0, width: 0.0 }, 0.5, 1.0).is_err());
        assert!(PotentialSpec::new(1.0, 0.0, WSpec::Newton, 0.0, 1.0).is_err());
    }
}
