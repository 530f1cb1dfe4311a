//! Node embeddings from uniform random walks and skip-gram with negative
//! sampling.

use alloc::vec;
use alloc::vec::Vec;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::Graph;
use crate::math;
use crate::rng::{keyed_substream, substream, Stream};
use crate::tensor::Tensor;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EmbeddingError {
    #[error("graph has no edges")]
    NoEdges,
    #[error("walk corpus is empty")]
    EmptyCorpus,
    #[error("invalid embedding config: {0}")]
    InvalidConfig(&'static str),
    #[error("walk visits node {node} but only {nodes} nodes exist")]
    NodeOutOfRange { node: usize, nodes: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingConfig {
    pub dim: usize,
    pub walk_length: usize,
    pub walks_per_node: usize,
    /// Context positions on each side of the center.
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    /// Initial learning rate, decayed linearly to `lr * 1e-4`.
    pub lr: f64,
    pub seed: u64,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig {
            dim: 64,
            walk_length: 40,
            walks_per_node: 10,
            window: 5,
            negatives: 5,
            epochs: 3,
            lr: 0.025,
            seed: 0,
        }
    }
}

impl EmbeddingConfig {
    pub fn validate(&self) -> Result<(), EmbeddingError> {
        if self.dim == 0 {
            return Err(EmbeddingError::InvalidConfig("dim must be >= 1"));
        }
        if self.window == 0 {
            return Err(EmbeddingError::InvalidConfig("window must be >= 1"));
        }
        if self.negatives == 0 {
            return Err(EmbeddingError::InvalidConfig("negatives must be >= 1"));
        }
        if self.walk_length == 0 || self.walks_per_node == 0 {
            return Err(EmbeddingError::InvalidConfig("walk_length and walks_per_node must be >= 1"));
        }
        if !(self.lr > 0.0) {
            return Err(EmbeddingError::InvalidConfig("lr must be > 0"));
        }
        Ok(())
    }
}

/// `walks_per_node` walks from every node, ordered round by round. Each node
/// draws from its own substream, so a node's walks do not depend on any other
/// node's.
pub fn random_walks(g: &Graph, cfg: &EmbeddingConfig) -> Result<Vec<Vec<usize>>, EmbeddingError> {
    cfg.validate()?;
    if g.edge_count() == 0 {
        return Err(EmbeddingError::NoEdges);
    }
    let n = g.node_count();
    let per_node: Vec<Vec<Vec<usize>>> = (0..n)
        .map(|start| {
            let mut rng = keyed_substream(cfg.seed, Stream::Walks, start as u64);
            (0..cfg.walks_per_node)
                .map(|_| {
                    let mut walk = Vec::with_capacity(cfg.walk_length);
                    walk.push(start);
                    if g.degree(start) > 0 {
                        while walk.len() < cfg.walk_length {
                            let nb = g.neighbors(*walk.last().unwrap());
                            walk.push(nb[rng.random_range(0..nb.len())]);
                        }
                    }
                    walk
                })
                .collect()
        })
        .collect();
    let mut walks = Vec::with_capacity(n * cfg.walks_per_node);
    for round in 0..cfg.walks_per_node {
        for node_walks in &per_node {
            walks.push(node_walks[round].clone());
        }
    }
    Ok(walks)
}

/// Trained embedding matrix and the mean negative-sampling loss of each epoch.
#[derive(Clone, Debug)]
pub struct Embeddings {
    pub vectors: Tensor,
    pub epoch_loss: Vec<f64>,
}

fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -math::ln(1.0 + math::exp(-x))
    } else {
        x - math::ln(1.0 + math::exp(x))
    }
}

/// Skip-gram with negative sampling. Negatives are drawn from corpus
/// frequencies raised to 0.75. Training is single-threaded and deterministic
/// in `cfg.seed`.
pub fn train_embeddings(walks: &[Vec<usize>], nodes: usize, cfg: &EmbeddingConfig) -> Result<Embeddings, EmbeddingError> {
    cfg.validate()?;
    let tokens: usize = walks.iter().map(Vec::len).sum();
    if tokens == 0 || nodes == 0 {
        return Err(EmbeddingError::EmptyCorpus);
    }
    let mut counts = vec![0usize; nodes];
    for &v in walks.iter().flatten() {
        if v >= nodes {
            return Err(EmbeddingError::NodeOutOfRange { node: v, nodes });
        }
        counts[v] += 1;
    }
    let weights: Vec<f64> = counts.iter().map(|&c| math::powf(c as f64, 0.75)).collect();
    let noise = WeightedIndex::new(&weights).map_err(|_| EmbeddingError::EmptyCorpus)?;

    let dim = cfg.dim;
    let mut rng = substream(cfg.seed, Stream::Embedding);
    let half = 0.5 / dim as f64;
    let mut input: Vec<f64> = (0..nodes * dim).map(|_| rng.random_range(-half..half)).collect();
    let mut output = vec![0.0; nodes * dim];
    let mut grad = vec![0.0; dim];

    let total_steps = (cfg.epochs * tokens).max(1) as f64;
    let mut processed = 0usize;
    let mut epoch_loss = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        let mut loss = 0.0;
        let mut pairs = 0usize;
        for walk in walks {
            for (pos, &center) in walk.iter().enumerate() {
                let lr = cfg.lr * (1.0 - processed as f64 / total_steps).max(1e-4);
                processed += 1;
                let lo = pos.saturating_sub(cfg.window);
                let hi = (pos + cfg.window + 1).min(walk.len());
                for (cpos, &context) in walk.iter().enumerate().take(hi).skip(lo) {
                    if cpos == pos {
                        continue;
                    }
                    grad.iter_mut().for_each(|g| *g = 0.0);
                    let u = &input[center * dim..(center + 1) * dim];
                    for k in 0..=cfg.negatives {
                        let (target, label) = if k == 0 {
                            (context, 1.0)
                        } else {
                            (noise.sample(&mut rng), 0.0)
                        };
                        let o = &mut output[target * dim..(target + 1) * dim];
                        let dot: f64 = u.iter().zip(o.iter()).map(|(a, b)| a * b).sum();
                        loss -= if label > 0.0 { log_sigmoid(dot) } else { log_sigmoid(-dot) };
                        let step = lr * (label - math::sigmoid(dot));
                        for ((g, &ui), oi) in grad.iter_mut().zip(u).zip(o.iter_mut()) {
                            *g += step * *oi;
                            *oi += step * ui;
                        }
                    }
                    for (ui, g) in input[center * dim..(center + 1) * dim].iter_mut().zip(&grad) {
                        *ui += g;
                    }
                    pairs += 1;
                }
            }
        }
        epoch_loss.push(if pairs > 0 { loss / pairs as f64 } else { 0.0 });
    }
    log::debug!("embedding loss per epoch: {epoch_loss:?}");
    let vectors = Tensor::from_vec(nodes, dim, input).expect("embedding shape");
    Ok(Embeddings { vectors, epoch_loss })
}

/// Walks plus training in one call.
pub fn embed_graph(g: &Graph, cfg: &EmbeddingConfig) -> Result<Embeddings, EmbeddingError> {
    let walks = random_walks(g, cfg)?;
    train_embeddings(&walks, g.node_count(), cfg)
}
