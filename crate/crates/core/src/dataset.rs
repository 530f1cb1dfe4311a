//! In-memory datasets, split construction and the planted-partition
//! generator.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Graph, GraphError, Labeling};
use crate::rng::{substream, Stream};
use crate::tensor::Tensor;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DatasetError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("{features} feature rows for {nodes} nodes")]
    FeatureRows { features: usize, nodes: usize },
    #[error("{labels} labels for {nodes} nodes")]
    LabelCount { labels: usize, nodes: usize },
    #[error("label {label} of node {node} is not below the class count {classes}")]
    Label { node: usize, label: usize, classes: usize },
    #[error("split masks overlap at node {0}")]
    Overlap(usize),
    #[error("split masks cover {masks} nodes, dataset has {nodes}")]
    SplitSize { masks: usize, nodes: usize },
    #[error("invalid generator parameter: {0}")]
    Parameter(&'static str),
}

/// Disjoint train/validation/test membership masks. Nodes in none of them are
/// unlabeled and unevaluated.
#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<bool>,
    pub val: Vec<bool>,
    pub test: Vec<bool>,
}

fn members(mask: &[bool]) -> Vec<usize> {
    mask.iter().enumerate().filter(|(_, &m)| m).map(|(v, _)| v).collect()
}

impl Split {
    pub fn empty(n: usize) -> Self {
        Split {
            train: vec![false; n],
            val: vec![false; n],
            test: vec![false; n],
        }
    }

    pub fn train_nodes(&self) -> Vec<usize> {
        members(&self.train)
    }

    pub fn val_nodes(&self) -> Vec<usize> {
        members(&self.val)
    }

    pub fn test_nodes(&self) -> Vec<usize> {
        members(&self.test)
    }

    /// Every node outside the training set.
    pub fn unlabeled_nodes(&self) -> Vec<usize> {
        (0..self.train.len()).filter(|&v| !self.train[v]).collect()
    }

    pub fn validate(&self, n: usize) -> Result<(), DatasetError> {
        for masks in [self.train.len(), self.val.len(), self.test.len()] {
            if masks != n {
                return Err(DatasetError::SplitSize { masks, nodes: n });
            }
        }
        for v in 0..n {
            if (self.train[v] as u8 + self.val[v] as u8 + self.test[v] as u8) > 1 {
                return Err(DatasetError::Overlap(v));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub train_per_class: usize,
    /// Validation size when at least `validation + test` nodes remain after
    /// the training draw; otherwise 20% of the remainder.
    pub validation: usize,
    pub test: usize,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            train_per_class: 20,
            validation: 500,
            test: 1000,
        }
    }
}

/// Seeded split: `train_per_class` random nodes of every class (all of them
/// when a class is smaller), then validation and test drawn from a shuffle of
/// the rest. A pure function of `(labels, classes, cfg, seed)`.
pub fn make_split(labels: &[usize], classes: usize, cfg: &SplitConfig, seed: u64) -> Split {
    let n = labels.len();
    let mut rng = substream(seed, Stream::Split);
    let mut split = Split::empty(n);
    for c in 0..classes {
        let mut class_nodes: Vec<usize> = (0..n).filter(|&v| labels[v] == c).collect();
        class_nodes.shuffle(&mut rng);
        for &v in class_nodes.iter().take(cfg.train_per_class) {
            split.train[v] = true;
        }
    }
    let mut rest: Vec<usize> = (0..n).filter(|&v| !split.train[v]).collect();
    rest.shuffle(&mut rng);
    let val_count = if rest.len() >= cfg.validation + cfg.test {
        cfg.validation
    } else {
        (rest.len() + 4) / 5
    };
    let test_count = cfg.test.min(rest.len() - val_count);
    for &v in &rest[..val_count] {
        split.val[v] = true;
    }
    for &v in &rest[val_count..val_count + test_count] {
        split.test[v] = true;
    }
    split
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub graph: Graph,
    pub features: Tensor,
    pub labels: Vec<usize>,
    pub class_count: usize,
    pub split: Split,
}

impl Dataset {
    pub fn new(
        name: String,
        graph: Graph,
        features: Tensor,
        labels: Vec<usize>,
        class_count: usize,
        split: Split,
    ) -> Result<Self, DatasetError> {
        let n = graph.node_count();
        if features.rows() != n {
            return Err(DatasetError::FeatureRows {
                features: features.rows(),
                nodes: n,
            });
        }
        if labels.len() != n {
            return Err(DatasetError::LabelCount { labels: labels.len(), nodes: n });
        }
        if let Some((node, &label)) = labels.iter().enumerate().find(|(_, &l)| l >= class_count) {
            return Err(DatasetError::Label {
                node,
                label,
                classes: class_count,
            });
        }
        split.validate(n)?;
        Ok(Dataset {
            name,
            graph,
            features,
            labels,
            class_count,
            split,
        })
    }

    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    /// Ground truth with the training nodes marked as labeled.
    pub fn labeling(&self) -> Labeling {
        Labeling::with_mask(self.labels.clone(), self.class_count, self.split.train.clone()).expect("validated labels")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantedPartitionConfig {
    pub classes: usize,
    pub nodes_per_class: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub feature_dim: usize,
    /// Class `c` features are centered on `feature_shift` times the unit
    /// vector `c mod feature_dim`, with unit Gaussian noise.
    pub feature_shift: f64,
    pub labels_per_class: usize,
    pub validation: usize,
    pub test: usize,
}

impl Default for PlantedPartitionConfig {
    fn default() -> Self {
        PlantedPartitionConfig {
            classes: 4,
            nodes_per_class: 200,
            p_in: 0.2,
            p_out: 0.01,
            feature_dim: 32,
            feature_shift: 1.0,
            labels_per_class: 5,
            validation: 500,
            test: 1000,
        }
    }
}

/// Block-random graph with Gaussian class-conditional features. Class
/// membership is a random permutation of equal-sized blocks.
pub fn planted_partition(cfg: &PlantedPartitionConfig, seed: u64) -> Result<Dataset, DatasetError> {
    if cfg.classes == 0 || cfg.nodes_per_class == 0 || cfg.feature_dim == 0 {
        return Err(DatasetError::Parameter("classes, nodes_per_class and feature_dim must be >= 1"));
    }
    if !(0.0..=1.0).contains(&cfg.p_in) || !(0.0..=1.0).contains(&cfg.p_out) {
        return Err(DatasetError::Parameter("edge probabilities must lie in [0, 1]"));
    }
    let n = cfg.classes * cfg.nodes_per_class;
    let mut rng = substream(seed, Stream::Synthetic);
    let mut labels: Vec<usize> = (0..n).map(|v| v / cfg.nodes_per_class).collect();
    labels.shuffle(&mut rng);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let p = if labels[i] == labels[j] { cfg.p_in } else { cfg.p_out };
            if rng.random_bool(p) {
                edges.push((i, j));
            }
        }
    }
    let graph = Graph::build(n, &edges)?;
    let mut features = Tensor::zeros(n, cfg.feature_dim);
    for v in 0..n {
        for (d, x) in features.row_mut(v).iter_mut().enumerate() {
            let center = if d == labels[v] % cfg.feature_dim { cfg.feature_shift } else { 0.0 };
            *x = center + rng.sample::<f64, _>(StandardNormal);
        }
    }
    let split_cfg = SplitConfig {
        train_per_class: cfg.labels_per_class,
        validation: cfg.validation,
        test: cfg.test,
    };
    let split = make_split(&labels, cfg.classes, &split_cfg, seed);
    Dataset::new(
        alloc::format!("planted-{}x{}", cfg.classes, cfg.nodes_per_class),
        graph,
        features,
        labels,
        cfg.classes,
        split,
    )
}
