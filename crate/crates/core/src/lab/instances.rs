use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Seed;
use crate::graph::{check_connectivity_assumption, Graph, Labeling};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InstanceConfig {
    pub max_nodes: usize,
    pub min_classes: usize,
    pub max_classes: usize,
    /// Probability of each extra same-class edge beyond a spanning tree.
    pub intra_density: f64,
    /// Probability of each cross-class edge.
    pub cross_density: f64,
}

impl Default for InstanceConfig {
    fn default() -> Self {
        InstanceConfig {
            max_nodes: 12,
            min_classes: 2,
            max_classes: 3,
            intra_density: 0.4,
            cross_density: 0.15,
        }
    }
}

/// A graph, its ground truth and one seed per class (unit loss).
#[derive(Clone, Debug, PartialEq)]
pub struct TheoremInstance {
    pub graph: Graph,
    pub ground_truth: Labeling,
    pub seeds: Vec<Seed>,
}

/// Rejection-samples a connected-per-class graph with at least one cross
/// edge that satisfies the connectivity assumption. Every class gets at least
/// two nodes.
pub fn random_theorem_instance<R: Rng + ?Sized>(cfg: &InstanceConfig, rng: &mut R) -> TheoremInstance {
    assert!(cfg.min_classes >= 2 && cfg.min_classes <= cfg.max_classes, "class range");
    assert!(cfg.max_nodes >= 2 * cfg.min_classes, "too few nodes for the class range");
    loop {
        let max_classes = cfg.max_classes.min(cfg.max_nodes / 2);
        let classes = rng.random_range(cfg.min_classes..=max_classes);
        let n = rng.random_range(2 * classes..=cfg.max_nodes);
        let mut labels: Vec<usize> = (0..n).map(|v| if v < 2 * classes { v / 2 } else { rng.random_range(0..classes) }).collect();
        labels.shuffle(rng);

        let mut edges = Vec::new();
        for c in 0..classes {
            let mut members: Vec<usize> = (0..n).filter(|&v| labels[v] == c).collect();
            members.shuffle(rng);
            for k in 1..members.len() {
                let parent = members[rng.random_range(0..k)];
                edges.push((parent, members[k]));
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                let p = if labels[i] == labels[j] { cfg.intra_density } else { cfg.cross_density };
                if rng.random_bool(p) {
                    edges.push((i, j));
                }
            }
        }
        if !edges.iter().any(|&(i, j)| labels[i] != labels[j]) {
            continue;
        }
        let graph = Graph::build(n, &edges).expect("generated edges are valid");
        let truth = Labeling::new(labels.clone(), classes).expect("labels in range");
        if !check_connectivity_assumption(&graph, &truth).expect("complete labeling").holds {
            continue;
        }
        let mut mask = vec![false; n];
        let mut seeds = Vec::with_capacity(classes);
        for c in 0..classes {
            let members: Vec<usize> = (0..n).filter(|&v| labels[v] == c).collect();
            let node = members[rng.random_range(0..members.len())];
            mask[node] = true;
            seeds.push(Seed::new(node, c));
        }
        seeds.sort_by_key(|s| s.node);
        return TheoremInstance {
            graph,
            ground_truth: Labeling::with_mask(labels, classes, mask).expect("labels in range"),
            seeds,
        };
    }
}
