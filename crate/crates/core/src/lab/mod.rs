//! Laplacian-regularized labeling on graphs with fake nodes: the objective,
//! an exhaustive minimizer, label propagation, the degree threshold `d0`,
//! and the adversarial label propagation pipeline.

mod adversarial;
mod exhaustive;
mod instances;
mod propagation;
mod theorem;

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{edge_weight, Graph, GraphError, Labeling};

pub use adversarial::{adversarial_lp, adversarial_lp_on_graph, AdversarialLpConfig, AdversarialLpOutcome};
pub use exhaustive::{brute_force_min, ENUMERATION_BUDGET};
pub use instances::{random_theorem_instance, InstanceConfig, TheoremInstance};
pub use propagation::{label_propagation, PropagationResult, DEFAULT_MAX_ITERS};
pub use theorem::{
    compute_d0, corollary_check, verify_perfect_classification, ClassStats, CorollaryReport, CorollaryStep, D0Report,
    TheoremReport,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("seed node {0} is not a real node of the graph")]
    SeedNotReal(usize),
    #[error("node {0} is seeded twice")]
    DuplicateSeed(usize),
    #[error("seed on node {node} has class {class}, but there are {classes} classes")]
    SeedClass { node: usize, class: usize, classes: usize },
    #[error("seed on node {node} has non-positive loss {loss}")]
    SeedLoss { node: usize, loss: f64 },
    #[error("lambda must be finite and >= 0, got {0}")]
    Lambda(f64),
    #[error("real node {0} carries the fake label")]
    FakeLabelOnRealNode(usize),
    #[error("labeling covers {labels} nodes, graph has {nodes}")]
    LabelingSize { labels: usize, nodes: usize },
    #[error("exhaustive search needs {classes}^{nodes} labelings, over the budget of {budget}")]
    BudgetExceeded { classes: usize, nodes: usize, budget: u64 },
    #[error("connectivity assumption violated: {0:?}")]
    Assumption(Vec<crate::graph::ConnectivityViolation>),
    #[error("{0} values given for {1} nodes")]
    ScoreCount(usize, usize),
    #[error("threshold must lie in (0, 1], got {0}")]
    Threshold(f64),
}

/// A labeled node and the loss charged when a labeling disagrees with it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Seed {
    pub node: usize,
    pub class: usize,
    pub loss: f64,
}

impl Seed {
    pub fn new(node: usize, class: usize) -> Self {
        Seed { node, class, loss: 1.0 }
    }
}

/// Seeds for every labeled node of `lab`, each with unit loss.
pub fn seeds_from_labeling(lab: &Labeling) -> Vec<Seed> {
    (0..lab.len())
        .filter(|&v| lab.is_labeled(v))
        .map(|v| Seed::new(v, lab.label(v)))
        .collect()
}

/// Supervised loss on seeds plus `lambda` times the normalized weight of
/// every real-real edge whose endpoints disagree. Weights use degrees that
/// include fake attachments.
#[derive(Clone, Debug, PartialEq)]
pub struct RegularizationProblem {
    graph: Graph,
    seeds: Vec<Seed>,
    lambda: f64,
    class_count: usize,
    /// Real-real edges `(i, j, weight)`, `i < j`, each once.
    weighted_edges: Vec<(usize, usize, f64)>,
}

impl RegularizationProblem {
    pub fn new(graph: Graph, seeds: Vec<Seed>, lambda: f64, class_count: usize) -> Result<Self, LabError> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(LabError::Lambda(lambda));
        }
        let mut seen = vec![false; graph.node_count()];
        for s in &seeds {
            if s.node >= graph.node_count() || graph.is_fake(s.node) {
                return Err(LabError::SeedNotReal(s.node));
            }
            if core::mem::replace(&mut seen[s.node], true) {
                return Err(LabError::DuplicateSeed(s.node));
            }
            if s.class >= class_count {
                return Err(LabError::SeedClass {
                    node: s.node,
                    class: s.class,
                    classes: class_count,
                });
            }
            if !(s.loss > 0.0) {
                return Err(LabError::SeedLoss { node: s.node, loss: s.loss });
            }
        }
        let weighted_edges = graph
            .real_edges()
            .map(|(i, j)| (i, j, edge_weight(graph.degree(i), graph.degree(j))))
            .collect();
        Ok(RegularizationProblem {
            graph,
            seeds,
            lambda,
            class_count,
            weighted_edges,
        })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn seeds(&self) -> &[Seed] {
        &self.seeds
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    /// Same seeds and weights on a different graph (usually an augmented one).
    pub fn with_graph(&self, graph: Graph) -> Result<Self, LabError> {
        Self::new(graph, self.seeds.clone(), self.lambda, self.class_count)
    }

    pub(crate) fn weighted_edges(&self) -> &[(usize, usize, f64)] {
        &self.weighted_edges
    }

    /// Objective of a labeling given as one label per node. Entries for fake
    /// nodes are ignored.
    pub fn objective(&self, labels: &[usize]) -> Result<f64, LabError> {
        let n = self.graph.node_count();
        if labels.len() != n {
            return Err(LabError::LabelingSize { labels: labels.len(), nodes: n });
        }
        if let Some(v) = self.graph.real_nodes().find(|&v| labels[v] >= self.class_count) {
            return Err(LabError::FakeLabelOnRealNode(v));
        }
        Ok(self.objective_unchecked(labels))
    }

    pub(crate) fn objective_unchecked(&self, labels: &[usize]) -> f64 {
        let sup: f64 = self
            .seeds
            .iter()
            .filter(|s| labels[s.node] != s.class)
            .map(|s| s.loss)
            .sum();
        let smooth: f64 = self
            .weighted_edges
            .iter()
            .filter(|&&(i, j, _)| labels[i] != labels[j])
            .map(|&(_, _, w)| w)
            .sum();
        sup + self.lambda * smooth
    }
}

/// Objective of `lab` padded to the problem's graph.
pub fn objective(problem: &RegularizationProblem, lab: &Labeling) -> Result<f64, LabError> {
    let padded = lab.extend_to(problem.graph());
    problem.objective(padded.labels())
}

/// Fraction of `nodes` whose predicted label matches the truth.
pub fn accuracy(predicted: &[usize], truth: &[usize], nodes: &[usize]) -> f64 {
    if nodes.is_empty() {
        return 0.0;
    }
    let hits = nodes.iter().filter(|&&v| predicted[v] == truth[v]).count();
    hits as f64 / nodes.len() as f64
}
