//! Run configuration, read from a single TOML file.

use crate::CliError;
use hfcollapse::dynamics::IntegratorConfig;
use hfcollapse::initial::InitialSpec;
use hfcollapse::potential::{PotentialSpec, WSpec};
use hfcollapse::radial::GridSpec;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Hf,
    Hfb,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialConfig {
    pub coupling: f64,
    #[serde(default = "one")]
    pub mass: f64,
    #[serde(default = "half")]
    pub epsilon: f64,
    #[serde(default = "newton")]
    pub w: WSpec,
    /// Largest |x - y| covered by the sup-functionals of w; defaults to 2R.
    #[serde(default)]
    pub domain: Option<f64>,
    /// Factor applied to the coupling chosen by make_initial_data when a target is set.
    #[serde(default = "one")]
    pub boost: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Write a checkpoint every this many recorded samples; 0 disables intermediate checkpoints.
    #[serde(default = "ten")]
    pub checkpoint_every: usize,
    #[serde(default = "yes")]
    pub plots: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { checkpoint_every: 10, plots: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsConfig {
    #[serde(default = "five")]
    pub envelope_fit_samples: usize,
    #[serde(default = "three")]
    pub virial_slack: f64,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self { envelope_fit_samples: 5, virial_slack: 3.0 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: Model,
    pub lambda: usize,
    /// Start HFB from α₀ = 0; required for an HFB run without pairing data.
    #[serde(default)]
    pub zero_pairing: bool,
    pub grid: GridSpec,
    pub potential: PotentialConfig,
    pub initial: InitialSpec,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
}

fn one() -> f64 {
    1.0
}
fn half() -> f64 {
    0.5
}
fn three() -> f64 {
    3.0
}
fn five() -> usize {
    5
}
fn ten() -> usize {
    10
}
fn yes() -> bool {
    true
}
fn newton() -> WSpec {
    WSpec::Newton
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| e.to_string())?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), String> {
        let p = &self.potential;
        if !(p.coupling > 0.0 && p.coupling.is_finite()) {
            return Err(format!("potential.coupling must be > 0, got {}", p.coupling));
        }
        if !(p.boost >= 1.0 && p.boost.is_finite()) {
            return Err(format!("potential.boost must be >= 1, got {}", p.boost));
        }
        let pairing = self.initial.pairing.as_ref().is_some_and(|s| s.amplitude > 0.0);
        match self.model {
            Model::Hf if pairing => return Err("model hf does not take initial.pairing".into()),
            Model::Hf if self.zero_pairing => return Err("zero_pairing only applies to model hfb".into()),
            Model::Hfb if !pairing && !self.zero_pairing => {
                return Err("model hfb needs initial.pairing with amplitude > 0, or zero_pairing = true".into())
            }
            Model::Hfb if pairing && self.zero_pairing => {
                return Err("zero_pairing contradicts initial.pairing".into())
            }
            _ => {}
        }
        if self.diagnostics.envelope_fit_samples == 0 {
            return Err("diagnostics.envelope_fit_samples must be >= 1".into());
        }
        self.integrator.validate().map_err(|e| e.to_string())?;
        self.potential_spec().map_err(|e| e.to_string())?;
        Ok(())
    }

    pub fn potential_spec(&self) -> hfcollapse::Result<PotentialSpec> {
        let p = &self.potential;
        let domain = p.domain.unwrap_or(2.0 * self.grid.radius);
        PotentialSpec::new(p.coupling, p.mass, p.w.clone(), p.epsilon, domain)
    }

    /// Canonical JSON used for hashing: struct field order, shortest round-trip floats.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
model = "hf"
lambda = 1

[grid]
n = 16
radius = 8.0
scheme = "uniform"

[potential]
coupling = 0.5

[initial]
family = "gaussian-shells"
shells = [{ ell = 0, center = 2.0, width = 1.0, occupation = 0.8 }]
"#;

    #[test]
    fn defaults_fill_in() {
        let cfg = RunConfig::parse(BASE).unwrap();
        assert_eq!(cfg.potential.mass, 1.0);
        assert_eq!(cfg.potential.w, WSpec::Newton);
        assert_eq!(cfg.diagnostics.envelope_fit_samples, 5);
        assert_eq!(cfg.potential_spec().unwrap().domain, 16.0);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::parse(&format!("{BASE}\n[output]\nplot = true\n")).is_err());
        assert!(RunConfig::parse(&BASE.replace("coupling = 0.5", "coupling = 0.5\nkappa = 1")).is_err());
        assert!(RunConfig::parse(&BASE.replace("occupation = 0.8", "occupation = 0.8, spin = 1")).is_err());
        assert!(RunConfig::parse(&BASE.replace("family = ", "chrip = 0.1\nfamily = ")).is_err());
    }

    #[test]
    fn model_and_pairing_must_agree() {
        let hfb = BASE.replace("model = \"hf\"", "model = \"hfb\"");
        assert!(RunConfig::parse(&hfb).is_err());
        assert!(RunConfig::parse(&format!("zero_pairing = true\n{hfb}")).is_ok());
        let paired = format!("{BASE}\n[initial.pairing]\namplitude = 0.5\n");
        assert!(RunConfig::parse(&paired).is_err());
        assert!(RunConfig::parse(&paired.replace("model = \"hf\"", "model = \"hfb\"")).is_ok());
    }

    #[test]
    fn coupling_must_be_positive() {
        assert!(RunConfig::parse(&BASE.replace("coupling = 0.5", "coupling = 0.0")).is_err());
    }
}
