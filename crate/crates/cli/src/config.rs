//! Experiment configuration read from TOML.
//!
//! Every field has a default, so an empty file (or no file) is valid.
//! Unknown keys are rejected.
//!
//! ```toml
//! grid = 256            # grid intervals
//! window = 0.2          # tilt window [-window, window]
//! s_nodes = 17          # Chebyshev nodes for the Lambda fit
//! n = [64, 256, 1024]
//! paths = 100000
//! y = [1.0, 2.0, 3.0]
//! target = "constant-one"
//! seed = 0
//! out = "randprod-out"
//! start = [1.0, 1.0]
//!
//! [ensemble]
//! preset = "positive-pair"
//! # or an explicit law:
//! # class = "positive"            # or "invertible"
//! # norm = "euclidean"            # or "l1"
//! # matrices = [[2, 1, 1, 1], [1, 1, 1, 2]]
//! # probs = [0.5, 0.5]
//! ```

use std::path::PathBuf;

use randprod::ensembles::presets;
use randprod::limits::Tail;
use randprod::{ClassTag, Ensemble, NormKind};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub class: Option<ClassTag>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub norm: Option<NormKind>,
    /// Row-major matrices.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrices: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probs: Option<Vec<f64>>,
}

impl EnsembleConfig {
    pub fn build(&self) -> Result<Ensemble, CliError> {
        match (&self.preset, &self.matrices) {
            (Some(_), Some(_)) => Err(CliError::Config("give either ensemble.preset or ensemble.matrices, not both".into())),
            (Some(name), None) => presets::by_name(name).ok_or_else(|| {
                CliError::Config(format!("unknown preset '{name}' (known: {})", presets::NAMES.join(", ")))
            }),
            (None, Some(m)) => {
                let probs = self.probs.clone().unwrap_or_else(|| vec![1.0; m.len()]);
                if probs.len() != m.len() {
                    return Err(CliError::Config(format!("{} matrices but {} probabilities", m.len(), probs.len())));
                }
                let entries = m.iter().cloned().zip(probs).collect();
                let class = self.class.unwrap_or(ClassTag::Invertible);
                Ok(Ensemble::build(entries, class, self.norm.unwrap_or(NormKind::Euclidean))?)
            }
            (None, None) => Err(CliError::Config("ensemble needs a preset or matrices".into())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub ensemble: EnsembleConfig,
    /// Grid intervals of the transfer-operator discretization.
    pub grid: usize,
    pub window: f64,
    pub s_nodes: usize,
    pub n: Vec<usize>,
    pub paths: usize,
    pub y: Vec<f64>,
    pub target: String,
    pub seed: u64,
    /// Output directory; not part of the config hash.
    #[serde(skip_serializing)]
    pub out: PathBuf,
    /// Starting vector, projected onto the ensemble's space.
    pub start: Vec<f64>,
    pub tails: Vec<Tail>,
    /// Relative tolerance of the moderate-deviation and local-limit cells.
    pub tolerance: f64,
    /// Max/min bound on `√n · gap` for Berry-Esseen.
    pub be_ratio: f64,
    /// Bound on Edgeworth gap over normal gap.
    pub edgeworth_ratio: f64,
    /// Local-limit interval `[a₁, a₂]`.
    pub interval: [f64; 2],
    pub condition_depth: usize,
    pub condition_trials: usize,
    /// Half-width of the `ρ` table.
    pub smoothing_y_max: f64,
    pub smoothing_points: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            ensemble: EnsembleConfig { preset: Some("positive-pair".into()), ..Default::default() },
            grid: 256,
            window: 0.2,
            s_nodes: 17,
            n: vec![64, 256, 1024],
            paths: 100_000,
            y: vec![1.0, 2.0, 3.0],
            target: "constant-one".into(),
            seed: 0,
            out: PathBuf::from("randprod-out"),
            start: vec![1.0, 1.0],
            tails: vec![Tail::Upper, Tail::Lower],
            tolerance: 0.15,
            be_ratio: 2.5,
            edgeworth_ratio: 0.6,
            interval: [-0.5, 0.5],
            condition_depth: 6,
            condition_trials: 16,
            smoothing_y_max: 10.0,
            smoothing_points: 201,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: &str| Err(CliError::Config(msg.into()));
        if self.grid < 64 {
            return bad("grid must be at least 64");
        }
        if !(self.window > 0.0) {
            return bad("window must be positive");
        }
        if self.s_nodes < 17 {
            return bad("s_nodes must be at least 17");
        }
        if self.n.is_empty() || self.n.contains(&0) {
            return bad("n must be a non-empty list of positive integers");
        }
        if self.paths < 2 {
            return bad("paths must be at least 2");
        }
        if self.y.iter().any(|y| !y.is_finite()) {
            return bad("y values must be finite");
        }
        if !(self.interval[0] < self.interval[1]) {
            return bad("interval must satisfy a1 < a2");
        }
        if self.smoothing_points < 2 || !(self.smoothing_y_max > 0.0) {
            return bad("smoothing table needs at least 2 points and a positive range");
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(ExperimentConfig::from_toml("").unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(ExperimentConfig::from_toml("gird = 3"), Err(CliError::Config(_))));
        assert!(ExperimentConfig::from_toml("[ensemble]\ncolour = 1").is_err());
    }

    #[test]
    fn explicit_ensemble() {
        let cfg = ExperimentConfig::from_toml(
            "[ensemble]\nclass = \"positive\"\nmatrices = [[2.0, 1.0, 1.0, 1.0], [1.0, 1.0, 1.0, 2.0]]\nprobs = [0.5, 0.5]\n",
        )
        .unwrap();
        assert_eq!(cfg.ensemble.build().unwrap(), presets::positive_pair());
        let no_preset = ExperimentConfig::from_toml("[ensemble]\nmatrices = [[2.0, 0.0, 0.0, 2.0]]\n").unwrap();
        assert_eq!(no_preset.ensemble.build().unwrap().dim(), 2);
        let both = "[ensemble]\npreset = \"point-mass\"\nmatrices = [[1.0, 0.0, 0.0, 1.0]]\n";
        assert!(ExperimentConfig::from_toml(both).unwrap().ensemble.build().is_err());
    }

    #[test]
    fn hash_ignores_output_directory() {
        let a = ExperimentConfig::default();
        let b = ExperimentConfig { out: "elsewhere".into(), ..a.clone() };
        assert_eq!(a.hash(), b.hash());
        let c = ExperimentConfig { seed: 1, ..a.clone() };
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn validation() {
        assert!(ExperimentConfig::from_toml("s_nodes = 5").is_err());
        assert!(ExperimentConfig::from_toml("interval = [1.0, 0.0]").is_err());
        assert!(ExperimentConfig::from_toml("n = []").is_err());
    }
}
