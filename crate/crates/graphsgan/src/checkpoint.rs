//! Versioned JSON snapshot of a trained classifier and generator.

use std::fs;
use std::path::{Path, PathBuf};

use graphsgan_core::nn::NnError;
use graphsgan_core::Network;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: checkpoint version {found} is not supported (expected {CHECKPOINT_VERSION})")]
    Version { path: PathBuf, found: u32 },
    #[error("{path}: {source}")]
    Network {
        path: PathBuf,
        #[source]
        source: NnError,
    },
    #[error("{path}: classifier takes {network} inputs, header says {header}")]
    InputDim { path: PathBuf, network: usize, header: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub dataset: String,
    pub seed: u64,
    pub input_dim: usize,
    pub class_count: usize,
    pub noise_dim: usize,
    pub best_epoch: usize,
    pub classifier: Network,
    pub generator: Network,
}

impl Checkpoint {
    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        let io = |source| CheckpointError::Io {
            path: path.to_path_buf(),
            source,
        };
        let json = serde_json::to_string(self).map_err(|source| CheckpointError::Json {
            path: path.to_path_buf(),
            source,
        })?;
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(io)?;
        }
        fs::write(path, json).map_err(io)
    }

    /// Reads and checks the version before deserializing the networks.
    pub fn load(path: &Path) -> Result<Self, CheckpointError> {
        let text = fs::read_to_string(path).map_err(|source| CheckpointError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let json_err = |source| CheckpointError::Json {
            path: path.to_path_buf(),
            source,
        };
        #[derive(Deserialize)]
        struct Header {
            version: u32,
        }
        let header: Header = serde_json::from_str(&text).map_err(json_err)?;
        if header.version != CHECKPOINT_VERSION {
            return Err(CheckpointError::Version {
                path: path.to_path_buf(),
                found: header.version,
            });
        }
        let ckpt: Checkpoint = serde_json::from_str(&text).map_err(json_err)?;
        for net in [&ckpt.classifier, &ckpt.generator] {
            net.validate().map_err(|source| CheckpointError::Network {
                path: path.to_path_buf(),
                source,
            })?;
        }
        match ckpt.classifier.input_dim() {
            Some(d) if d != ckpt.input_dim => Err(CheckpointError::InputDim {
                path: path.to_path_buf(),
                network: d,
                header: ckpt.input_dim,
            }),
            _ => Ok(ckpt),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use graphsgan_core::nn::{ClassifierSpec, GeneratorSpec};
    use graphsgan_core::rng::{substream, Stream};

    fn sample() -> Checkpoint {
        let mut rng = substream(4, Stream::Init);
        let classifier = Network::classifier(
            &ClassifierSpec {
                input_dim: 5,
                hidden: vec![7],
                classes: 3,
                input_noise: 0.05,
                hidden_noise: 0.5,
            },
            &mut rng,
        )
        .unwrap();
        let generator = Network::generator(
            &GeneratorSpec {
                noise_dim: 4,
                hidden: vec![6],
                output_dim: 5,
            },
            &mut rng,
        )
        .unwrap();
        Checkpoint {
            version: CHECKPOINT_VERSION,
            dataset: "toy".into(),
            seed: 4,
            input_dim: 5,
            class_count: 3,
            noise_dim: 4,
            best_epoch: 0,
            classifier,
            generator,
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        let ckpt = sample();
        ckpt.save(&p).unwrap();
        assert_eq!(Checkpoint::load(&p).unwrap(), ckpt);
    }

    #[test]
    fn future_version_is_refused() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        let mut ckpt = sample();
        ckpt.version = 99;
        ckpt.save(&p).unwrap();
        assert!(matches!(Checkpoint::load(&p), Err(CheckpointError::Version { found: 99, .. })));
    }

    #[test]
    fn header_must_match_the_network() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        let mut ckpt = sample();
        ckpt.input_dim = 6;
        ckpt.save(&p).unwrap();
        assert!(matches!(Checkpoint::load(&p), Err(CheckpointError::InputDim { .. })));
    }
}
