use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{accuracy, label_propagation, LabError, RegularizationProblem, Seed, DEFAULT_MAX_ITERS};
use crate::graph::{augment_degrees, knn_graph, Graph, Labeling, Metric};
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdversarialLpConfig {
    /// Neighbors per node in the kNN graph.
    pub k: usize,
    /// Nodes whose fake probability exceeds this are treated as marginal.
    pub tau: f64,
    /// Degree marginal nodes are raised to.
    pub r: usize,
    pub lambda: f64,
    pub max_iters: usize,
}

impl Default for AdversarialLpConfig {
    fn default() -> Self {
        AdversarialLpConfig {
            k: 10,
            tau: 0.1,
            r: 50,
            lambda: 1.0,
            max_iters: DEFAULT_MAX_ITERS,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdversarialLpOutcome {
    /// Labels of the real nodes (fake nodes dropped).
    pub labels: Vec<usize>,
    /// Accuracy over real nodes that are not seeds.
    pub accuracy: f64,
    /// Nodes whose degree was raised.
    pub boosted: Vec<usize>,
    pub graph: Graph,
}

/// kNN graph over `features`, then [`adversarial_lp_on_graph`]. With no node
/// above `tau`, or `r` below every boosted node's degree, this is plain label
/// propagation on the kNN graph.
pub fn adversarial_lp(
    features: &Tensor,
    ground_truth: &Labeling,
    p_fake: &[f64],
    cfg: &AdversarialLpConfig,
) -> Result<AdversarialLpOutcome, LabError> {
    let knn = knn_graph(features, cfg.k, Metric::Euclidean)?;
    adversarial_lp_on_graph(&knn, ground_truth, p_fake, cfg)
}

/// Degree augmentation of every real node with `p_fake > tau`, then label
/// propagation from the labeled nodes of `ground_truth`.
pub fn adversarial_lp_on_graph(
    graph: &Graph,
    ground_truth: &Labeling,
    p_fake: &[f64],
    cfg: &AdversarialLpConfig,
) -> Result<AdversarialLpOutcome, LabError> {
    let n = graph.node_count();
    if p_fake.len() != n {
        return Err(LabError::ScoreCount(p_fake.len(), n));
    }
    if ground_truth.len() != n {
        return Err(LabError::LabelingSize {
            labels: ground_truth.len(),
            nodes: n,
        });
    }
    if !(cfg.tau > 0.0 && cfg.tau <= 1.0) {
        return Err(LabError::Threshold(cfg.tau));
    }
    let boosted: Vec<usize> = graph.real_nodes().filter(|&v| p_fake[v] > cfg.tau).collect();
    let augmented = augment_degrees(graph, &boosted, cfg.r);
    let seeds: Vec<Seed> = graph
        .real_nodes()
        .filter(|&v| ground_truth.is_labeled(v))
        .map(|v| Seed::new(v, ground_truth.label(v)))
        .collect();
    let problem = RegularizationProblem::new(augmented, seeds, cfg.lambda, ground_truth.class_count())?;
    let result = label_propagation(&problem, cfg.max_iters);
    let labels = result.labeling.labels()[..n].to_vec();
    let evaluated: Vec<usize> = graph.real_nodes().filter(|&v| !ground_truth.is_labeled(v)).collect();
    let accuracy = accuracy(&labels, ground_truth.labels(), &evaluated);
    Ok(AdversarialLpOutcome {
        labels,
        accuracy,
        boosted,
        graph: problem.graph().clone(),
    })
}
