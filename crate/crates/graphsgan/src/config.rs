//! Experiment configuration read from TOML.
//!
//! Every section is optional and falls back to its defaults. The top-level
//! `seed` drives every random stream; `seed` keys inside sections are
//! overwritten by it.

use std::fs;
use std::path::{Path, PathBuf};

use graphsgan_core::dataset::{PlantedPartitionConfig, SplitConfig};
use graphsgan_core::embedding::EmbeddingConfig;
use graphsgan_core::game::GameConfig;
use graphsgan_core::lab::{AdversarialLpConfig, InstanceConfig};
use graphsgan_core::trainer::TrainConfig;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Environment variable that overrides the configured output directory.
pub const OUTPUT_DIR_ENV: &str = "GRAPHSGAN_OUTPUT_DIR";
pub const DEFAULT_OUTPUT_DIR: &str = "graphsgan-out";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config {path}: {source}")]
    Toml {
        path: PathBuf,
        #[source]
        source: toml::de::Error,
    },
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// Where the graph, features and labels come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DatasetSource {
    /// Generated block graph; the remaining keys are generator parameters.
    Planted(PlantedPartitionConfig),
    /// A directory in the plain-text layout written by `gen-synthetic`.
    Directory { path: PathBuf },
    /// LINQS-style `<name>.content` and `<name>.cites` inside `path`.
    Citation { path: PathBuf, name: String },
}

impl Default for DatasetSource {
    fn default() -> Self {
        DatasetSource::Planted(PlantedPartitionConfig::default())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LabConfig {
    /// Smoothness weight of the regularization objective.
    pub lambda: f64,
    /// Extra degree above the computed threshold when augmenting.
    pub margin: usize,
    pub instance: InstanceConfig,
    pub adversarial: AdversarialLpConfig,
}

impl Default for LabConfig {
    fn default() -> Self {
        LabConfig {
            lambda: 1.0,
            margin: 1,
            instance: InstanceConfig::default(),
            adversarial: AdversarialLpConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    /// Append the structural embedding to the node features.
    pub use_embedding: bool,
    pub dataset: DatasetSource,
    pub split: SplitConfig,
    pub embedding: EmbeddingConfig,
    pub train: TrainConfig,
    pub game: GameConfig,
    pub lab: LabConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 0,
            output_dir: None,
            use_embedding: true,
            dataset: DatasetSource::default(),
            split: SplitConfig::default(),
            embedding: EmbeddingConfig::default(),
            train: TrainConfig::default(),
            game: GameConfig::default(),
            lab: LabConfig::default(),
        }
    }
}

impl ExperimentConfig {
    /// Parses `path`; relative dataset paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg: ExperimentConfig = toml::from_str(&text).map_err(|source| ConfigError::Toml {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        match &mut cfg.dataset {
            DatasetSource::Directory { path } | DatasetSource::Citation { path, .. } if path.is_relative() => {
                *path = base.join(&*path);
            }
            _ => {}
        }
        if let Some(out) = &mut cfg.output_dir {
            if out.is_relative() {
                *out = base.join(&*out);
            }
        }
        cfg.set_seed(cfg.seed);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.embedding.seed = seed;
        self.train.seed = seed;
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |e: &dyn std::fmt::Display| ConfigError::Invalid(e.to_string());
        self.train.validate().map_err(|e| invalid(&e))?;
        self.game.validate().map_err(|e| invalid(&e))?;
        self.embedding.validate().map_err(|e| invalid(&e))?;
        if !(self.lab.lambda.is_finite() && self.lab.lambda >= 0.0) {
            return Err(ConfigError::Invalid(format!("lab.lambda must be finite and >= 0, got {}", self.lab.lambda)));
        }
        let adv = &self.lab.adversarial;
        if !(adv.tau > 0.0 && adv.tau <= 1.0) {
            return Err(ConfigError::Invalid(format!("lab.adversarial.tau must lie in (0, 1], got {}", adv.tau)));
        }
        if adv.k == 0 {
            return Err(ConfigError::Invalid("lab.adversarial.k must be >= 1".into()));
        }
        let inst = &self.lab.instance;
        if inst.min_classes < 2 || inst.min_classes > inst.max_classes || inst.max_nodes < 2 * inst.min_classes {
            return Err(ConfigError::Invalid(
                "lab.instance needs 2 <= min_classes <= max_classes and max_nodes >= 2 * min_classes".into(),
            ));
        }
        Ok(())
    }

    /// Precedence: explicit argument, then the environment variable, then the
    /// config file, then [`DEFAULT_OUTPUT_DIR`].
    pub fn resolve_output_dir(&self, cli: Option<&Path>) -> PathBuf {
        if let Some(p) = cli {
            return p.to_path_buf();
        }
        if let Some(p) = std::env::var_os(OUTPUT_DIR_ENV).filter(|v| !v.is_empty()) {
            return PathBuf::from(p);
        }
        self.output_dir.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
    }
}
