//! The uracil-cation vibronic parameter set and its TOML schema.
//!
//! See `data/uracil_cation.toml` for the annotated file shipped with the crate.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::potentials::PotentialSpec;
use crate::units::cm_inv_to_ev;
use crate::{Error, Result};

/// Electronic-state pairs whose vibronic couplings vanish by symmetry.
pub const FORBIDDEN_COUPLINGS: [(&str, &str); 2] = [("D0", "D3"), ("D2", "D3")];

const BUILTIN: &str = include_str!("../data/uracil_cation.toml");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UracilDataset {
    pub name: String,
    #[serde(default)]
    pub comments: String,
    pub states: Vec<String>,
    /// Electronic state energies in eV; empty means all zero.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub energies_ev: Vec<f64>,
    #[serde(rename = "mode")]
    pub modes: Vec<ModeEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeEntry {
    pub label: String,
    pub omega_cm: f64,
    #[serde(default, rename = "state")]
    pub states: Vec<StateEntry>,
    #[serde(default, rename = "coupling")]
    pub couplings: Vec<CouplingEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateEntry {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quartic_k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub morse: Option<MorseParams>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MorseParams {
    pub d0: f64,
    pub a: f64,
    pub q0: f64,
    pub e0: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingEntry {
    pub states: [String; 2],
    pub lambda: f64,
}

/// Reads and validates a dataset file.
pub fn load_uracil_dataset(path: impl AsRef<Path>) -> Result<UracilDataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    UracilDataset::from_toml_str(&text).map_err(|e| match e {
        Error::Dataset(msg) => Error::Dataset(format!("{}: {msg}", path.display())),
        other => other,
    })
}

impl UracilDataset {
    /// The parameter set shipped with the crate.
    pub fn builtin() -> Self {
        Self::from_toml_str(BUILTIN).expect("shipped dataset is valid")
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let ds: UracilDataset = toml::from_str(text).map_err(|e| Error::Dataset(e.to_string()))?;
        ds.validate()?;
        Ok(ds)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Dataset(e.to_string()))
    }

    pub fn state_index(&self, name: &str) -> Result<usize> {
        self.states.iter().position(|s| s == name).ok_or_else(|| Error::Dataset(format!("unknown electronic state {name:?}")))
    }

    pub fn mode(&self, label: &str) -> Result<&ModeEntry> {
        self.modes.iter().find(|m| m.label == label).ok_or_else(|| Error::Dataset(format!("unknown mode {label:?}")))
    }

    /// Energy of state `n` in eV.
    pub fn energy(&self, n: usize) -> f64 {
        self.energies_ev.get(n).copied().unwrap_or(0.0)
    }

    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(Error::Dataset(m));
        if self.states.is_empty() {
            return err("no electronic states".into());
        }
        let mut seen = HashSet::new();
        for s in &self.states {
            if !seen.insert(s) {
                return err(format!("duplicate state {s:?}"));
            }
        }
        if !self.energies_ev.is_empty() && self.energies_ev.len() != self.states.len() {
            return err(format!("{} energies for {} states", self.energies_ev.len(), self.states.len()));
        }
        if self.energies_ev.iter().any(|e| !e.is_finite()) {
            return err("non-finite state energy".into());
        }
        let mut labels = HashSet::new();
        for m in &self.modes {
            if !labels.insert(&m.label) {
                return err(format!("duplicate mode {:?}", m.label));
            }
            if !(m.omega_cm.is_finite() && m.omega_cm > 0.0) {
                return err(format!("mode {}: frequency must be positive, got {}", m.label, m.omega_cm));
            }
            let mut named = HashSet::new();
            for s in &m.states {
                self.state_index(&s.name).map_err(|e| Error::Dataset(format!("mode {}: {e}", m.label)))?;
                if !named.insert(&s.name) {
                    return err(format!("mode {}: state {} listed twice", m.label, s.name));
                }
                if s.morse.is_some() && (s.kappa.is_some() || s.gamma.is_some() || s.quartic_k.is_some()) {
                    return err(format!("mode {} state {}: Morse entry mixed with polynomial terms", m.label, s.name));
                }
                s.potential().validate().map_err(|e| Error::Dataset(format!("mode {} state {}: {e}", m.label, s.name)))?;
            }
            let mut pairs = HashSet::new();
            for c in &m.couplings {
                let a = self.state_index(&c.states[0]).map_err(|e| Error::Dataset(format!("mode {}: {e}", m.label)))?;
                let b = self.state_index(&c.states[1]).map_err(|e| Error::Dataset(format!("mode {}: {e}", m.label)))?;
                if a == b {
                    return err(format!("mode {}: coupling of {} with itself", m.label, c.states[0]));
                }
                if !c.lambda.is_finite() {
                    return err(format!("mode {}: non-finite coupling", m.label));
                }
                let key = (a.min(b), a.max(b));
                if !pairs.insert(key) {
                    return err(format!("mode {}: coupling {}-{} listed twice", m.label, c.states[0], c.states[1]));
                }
                let (x, y) = (&self.states[key.0], &self.states[key.1]);
                if FORBIDDEN_COUPLINGS.iter().any(|(p, q)| p == x && q == y) {
                    return err(format!("mode {}: coupling {x}-{y} is forbidden by symmetry", m.label));
                }
            }
        }
        Ok(())
    }
}

impl ModeEntry {
    pub fn omega_ev(&self) -> f64 {
        cm_inv_to_ev(self.omega_cm)
    }

    pub fn state(&self, name: &str) -> Option<&StateEntry> {
        self.states.iter().find(|s| s.name == name)
    }

    /// Coupling constant between two states (zero when not tabulated).
    pub fn coupling(&self, a: &str, b: &str) -> f64 {
        self.couplings.iter().find(|c| (c.states[0] == a && c.states[1] == b) || (c.states[0] == b && c.states[1] == a)).map_or(0.0, |c| c.lambda)
    }
}

impl StateEntry {
    /// The tabulated potential for this state, in the dataset's own terms.
    pub fn potential(&self) -> PotentialSpec {
        if let Some(m) = self.morse {
            return PotentialSpec::Morse { d0: m.d0, a: m.a, q0: m.q0, e0: m.e0 };
        }
        let mut p = PotentialSpec::Zero;
        if let Some(kappa) = self.kappa {
            p = p.plus(PotentialSpec::Linear { kappa });
        }
        if let Some(gamma) = self.gamma {
            p = p.plus(PotentialSpec::Quadratic { gamma });
        }
        if let Some(k) = self.quartic_k {
            p = p.plus(PotentialSpec::Quartic { k });
        }
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_has_expected_shape() {
        let ds = UracilDataset::builtin();
        assert_eq!(ds.states.len(), 4);
        assert_eq!(ds.modes.len(), 12);
        assert_eq!(ds.mode("nu3").unwrap().omega_cm, 388.0);
        let m = ds.mode("nu26").unwrap().state("D2").unwrap().morse.unwrap();
        assert_eq!(m, MorseParams { d0: 9.46894, a: -0.08653, q0: 0.37635, e0: -0.01037 });
        assert_eq!(ds.mode("nu10").unwrap().coupling("D1", "D0"), 0.04633);
        assert_eq!(ds.mode("nu21").unwrap().coupling("D0", "D2"), 0.0);
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let ds = UracilDataset::builtin();
        let text = ds.to_toml_string().unwrap();
        let back = UracilDataset::from_toml_str(&text).unwrap();
        assert_eq!(ds, back);
        for (a, b) in ds.modes.iter().zip(&back.modes) {
            for (s, t) in a.states.iter().zip(&b.states) {
                assert_eq!(s.kappa.map(f64::to_bits), t.kappa.map(f64::to_bits));
                assert_eq!(s.morse.map(|m| m.d0.to_bits()), t.morse.map(|m| m.d0.to_bits()));
            }
        }
    }

    #[test]
    fn forbidden_coupling_is_rejected() {
        let text = BUILTIN.replace(
            "coupling = [{ states = [\"D1\", \"D3\"], lambda = 0.07284 }]",
            "coupling = [{ states = [\"D1\", \"D3\"], lambda = 0.07284 }, { states = [\"D0\", \"D3\"], lambda = 0.01 }]",
        );
        assert_ne!(text, BUILTIN);
        let err = UracilDataset::from_toml_str(&text).unwrap_err();
        assert!(err.to_string().contains("forbidden"), "{err}");
    }

    #[test]
    fn non_positive_morse_depth_is_rejected() {
        let text = BUILTIN.replace("d0 = 9.46894", "d0 = -9.46894");
        assert!(UracilDataset::from_toml_str(&text).is_err());
    }

    #[test]
    fn unknown_state_is_rejected() {
        let text = BUILTIN.replace("{ name = \"D3\", kappa = 0.00132", "{ name = \"D7\", kappa = 0.00132");
        let err = UracilDataset::from_toml_str(&text).unwrap_err();
        assert!(err.to_string().contains("D7"));
    }

    #[test]
    fn missing_file_names_the_path() {
        let err = load_uracil_dataset("/nonexistent/uracil.toml").unwrap_err();
        assert!(err.to_string().contains("/nonexistent/uracil.toml"));
    }
}
