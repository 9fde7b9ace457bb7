//! Run configuration: a TOML file with command-line overrides.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use hybrid_qsp::compiler::HeraldPolicy;
use hybrid_qsp::fourier::DEFAULT_HALF_PERIOD;
use hybrid_qsp::potentials::PotentialSpec;
use hybrid_qsp::Exec;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Dataset file; the built-in uracil-cation table when absent.
    pub dataset: Option<PathBuf>,
    /// Mode labels; empty selects every mode.
    pub modes: Vec<String>,
    /// State labels; empty selects every state.
    pub states: Vec<String>,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub exec: Exec,
    pub fock_dim: usize,
    pub fourier: FourierConfig,
    pub synthesize: SynthesizeConfig,
    pub simulate: SimulateConfig,
    pub estimate: EstimateConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FourierConfig {
    /// Half-period `L` of the signal `exp(i pi Q / L)`.
    pub half_period: f64,
    /// Strip half-width for the analytic degree bound; scanned when absent.
    pub sigma: Option<f64>,
    /// Sup-norm target of each series.
    pub epsilon: f64,
    pub max_degree: usize,
    /// Time step in fs for `approximate` and `synthesize`.
    pub delta_t: f64,
    /// Potential used instead of the model's anharmonic pairs.
    pub potential: Option<PotentialSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthesizeConfig {
    pub mode: String,
    pub state: String,
    /// Fixed Fourier degree; the empirical search is used when absent.
    pub degree: Option<usize>,
    pub refine: bool,
    pub max_iters: u64,
    /// Number of Haar-random reference states.
    pub haar_references: usize,
    pub wigner: bool,
    pub wigner_half_width: f64,
    pub wigner_resolution: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleChoice {
    Trotterized,
    Exact,
    Both,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    /// Total time in fs.
    pub t_total: f64,
    /// Layer count; planned from `epsilon` and the commutator bound when absent.
    pub p: Option<usize>,
    pub epsilon: f64,
    pub initial_state: String,
    /// Position shift of the initial vacuum per mode label.
    pub displacements: BTreeMap<String, f64>,
    pub herald: HeraldPolicy,
    pub oracle: OracleChoice,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimateConfig {
    /// Per-measurement success probabilities `1 - δ` to report.
    pub herald_success: Vec<f64>,
    /// Layer count; planned from the simulate section when absent.
    pub p: Option<usize>,
    /// Uniform degree; synthesized per pair when absent.
    pub degree: Option<usize>,
    /// `δ` values for the depth versus shot trade-off.
    pub deltas: Vec<f64>,
    pub epsilon_per_delta: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset: None,
            modes: vec!["nu21".into(), "nu26".into()],
            states: vec!["D1".into(), "D3".into()],
            output_dir: PathBuf::from("hqsp-out"),
            seed: 1,
            exec: Exec::default(),
            fock_dim: 30,
            fourier: FourierConfig::default(),
            synthesize: SynthesizeConfig::default(),
            simulate: SimulateConfig::default(),
            estimate: EstimateConfig::default(),
        }
    }
}

impl Default for FourierConfig {
    fn default() -> Self {
        Self { half_period: DEFAULT_HALF_PERIOD, sigma: None, epsilon: 1e-3, max_degree: 150, delta_t: 0.3, potential: None }
    }
}

impl Default for SynthesizeConfig {
    fn default() -> Self {
        Self {
            mode: "nu26".into(),
            state: "D2".into(),
            degree: Some(39),
            refine: true,
            max_iters: 200,
            haar_references: 1,
            wigner: false,
            wigner_half_width: 5.0,
            wigner_resolution: 61,
        }
    }
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            t_total: 40.0,
            p: Some(100),
            epsilon: 0.01,
            initial_state: "D3".into(),
            displacements: BTreeMap::from([("nu21".to_string(), -4.0)]),
            herald: HeraldPolicy::Project,
            oracle: OracleChoice::Trotterized,
        }
    }
}

impl Default for EstimateConfig {
    fn default() -> Self {
        Self {
            herald_success: vec![0.9988, 0.9997],
            p: Some(100),
            degree: None,
            deltas: vec![1e-2, 3e-3, 1.2e-3, 3e-4, 1e-4],
            epsilon_per_delta: 0.5,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Validation(format!("invalid config {}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// SHA-256 of the canonical TOML form, ignoring the output directory.
    pub fn hash(&self) -> String {
        let canonical = RunConfig { output_dir: PathBuf::new(), ..self.clone() };
        Sha256::digest(canonical.to_toml().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Validation(m));
        if let Some(p) = &self.dataset {
            if !p.is_file() {
                return bad(format!("dataset file {} does not exist", p.display()));
            }
        }
        if self.fock_dim < 2 || self.fock_dim > 256 {
            return bad(format!("fock_dim must lie in [2, 256], got {}", self.fock_dim));
        }
        let f = &self.fourier;
        if !(f.half_period > 0.0 && f.half_period.is_finite()) {
            return bad(format!("fourier.half_period must be positive, got {}", f.half_period));
        }
        if !(f.epsilon > 0.0 && f.epsilon < 1.0) {
            return bad(format!("fourier.epsilon must lie in (0, 1), got {}", f.epsilon));
        }
        if !(f.delta_t > 0.0 && f.delta_t.is_finite()) {
            return bad(format!("fourier.delta_t must be positive, got {}", f.delta_t));
        }
        if f.sigma.is_some_and(|s| !(s > 0.0 && s <= f.half_period)) {
            return bad("fourier.sigma must lie in (0, half_period]".into());
        }
        if f.max_degree == 0 || f.max_degree > hybrid_qsp::gqsp::MAX_DEGREE {
            return bad(format!("fourier.max_degree must lie in [1, {}]", hybrid_qsp::gqsp::MAX_DEGREE));
        }
        let s = &self.synthesize;
        if s.degree.is_some_and(|d| d > hybrid_qsp::gqsp::MAX_DEGREE) {
            return bad(format!("synthesize.degree must be at most {}", hybrid_qsp::gqsp::MAX_DEGREE));
        }
        if s.wigner && (s.wigner_resolution < 2 || !(s.wigner_half_width > 0.0)) {
            return bad("Wigner grids need at least 2 points and a positive half-width".into());
        }
        let d = &self.simulate;
        if !(d.t_total > 0.0 && d.t_total.is_finite()) {
            return bad(format!("simulate.t_total must be positive, got {}", d.t_total));
        }
        if d.p == Some(0) || self.estimate.p == Some(0) {
            return bad("layer counts must be at least 1".into());
        }
        if !(d.epsilon > 0.0 && d.epsilon < 1.0) {
            return bad(format!("simulate.epsilon must lie in (0, 1), got {}", d.epsilon));
        }
        let e = &self.estimate;
        if e.herald_success.iter().any(|&s| !(s > 0.0 && s <= 1.0)) {
            return bad("estimate.herald_success values must lie in (0, 1]".into());
        }
        if e.deltas.iter().any(|&s| !(s > 0.0 && s < 1.0)) {
            return bad("estimate.deltas must lie in (0, 1)".into());
        }
        if !(e.epsilon_per_delta > 0.0) {
            return bad("estimate.epsilon_per_delta must be positive".into());
        }
        Ok(())
    }
}

/// Parses a comma-separated label list; `all` selects everything.
pub fn parse_labels(text: &str) -> Vec<String> {
    if text.trim() == "all" {
        return Vec::new();
    }
    text.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
}
