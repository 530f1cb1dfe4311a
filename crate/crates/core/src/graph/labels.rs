use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{induced_components, Graph, GraphError};

/// Per-node class assignment over `class_count` real classes.
///
/// The value `class_count` itself is the fake class. `labeled` marks the nodes
/// whose label is known to the learner.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Labeling {
    labels: Vec<usize>,
    class_count: usize,
    labeled: Vec<bool>,
}

impl Labeling {
    /// All nodes unlabeled (mask false); labels act as ground truth.
    pub fn new(labels: Vec<usize>, class_count: usize) -> Result<Self, GraphError> {
        let n = labels.len();
        Self::with_mask(labels, class_count, vec![false; n])
    }

    pub fn with_mask(
        labels: Vec<usize>,
        class_count: usize,
        labeled: Vec<bool>,
    ) -> Result<Self, GraphError> {
        if labeled.len() != labels.len() {
            return Err(GraphError::LabelingSize {
                labels: labeled.len(),
                nodes: labels.len(),
            });
        }
        for (node, (&label, &known)) in labels.iter().zip(&labeled).enumerate() {
            if label > class_count || (known && label == class_count) {
                return Err(GraphError::LabelOutOfRange {
                    node,
                    label,
                    classes: class_count,
                });
            }
        }
        Ok(Labeling {
            labels,
            class_count,
            labeled,
        })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, node: usize) -> usize {
        self.labels[node]
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn fake_label(&self) -> usize {
        self.class_count
    }

    pub fn is_labeled(&self, node: usize) -> bool {
        self.labeled[node]
    }

    pub fn labeled_mask(&self) -> &[bool] {
        &self.labeled
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Pads the labeling with fake labels so it covers every node of `g`
    /// (used after augmentation appended fake nodes).
    pub fn extend_to(&self, g: &Graph) -> Labeling {
        let mut out = self.clone();
        let n = g.node_count().max(self.labels.len());
        out.labels.resize(n, self.class_count);
        out.labeled.resize(n, false);
        out
    }

    /// Checks that every real node of `g` has a real class.
    pub(crate) fn check_complete(&self, g: &Graph) -> Result<(), GraphError> {
        if self.labels.len() != g.node_count() {
            return Err(GraphError::LabelingSize {
                labels: self.labels.len(),
                nodes: g.node_count(),
            });
        }
        for node in g.real_nodes() {
            if self.labels[node] >= self.class_count {
                return Err(GraphError::Unlabeled(node));
            }
        }
        Ok(())
    }
}

/// Split of the real nodes into marginal and interior sets (both sorted).
#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct NodePartition {
    pub marginal: Vec<usize>,
    pub interior: Vec<usize>,
}

impl NodePartition {
    pub fn is_marginal_mask(&self, node_count: usize) -> Vec<bool> {
        let mut mask = vec![false; node_count];
        for &m in &self.marginal {
            mask[m] = true;
        }
        mask
    }
}

/// Marginal nodes are real nodes with a real neighbor carrying a different
/// label; every other real node is interior. Fake nodes belong to neither.
pub fn classify_nodes(g: &Graph, lab: &Labeling) -> Result<NodePartition, GraphError> {
    lab.check_complete(g)?;
    let mut partition = NodePartition::default();
    for v in g.real_nodes() {
        let y = lab.label(v);
        let crosses = g
            .neighbors(v)
            .iter()
            .any(|&w| !g.is_fake(w) && lab.label(w) != y);
        if crosses {
            partition.marginal.push(v);
        } else {
            partition.interior.push(v);
        }
    }
    Ok(partition)
}

/// Subgraph induced by the class-`c` nodes and their out-of-class neighbors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartialGraph {
    pub graph: Graph,
    /// `original[k]` is the id in the source graph of local node `k`.
    pub original: Vec<usize>,
}

impl PartialGraph {
    pub fn local_id(&self, original: usize) -> Option<usize> {
        self.original.binary_search(&original).ok()
    }
}

pub fn partial_graph(g: &Graph, lab: &Labeling, class: usize) -> Result<PartialGraph, GraphError> {
    lab.check_complete(g)?;
    let mut members = BTreeSet::new();
    for v in g.real_nodes().filter(|&v| lab.label(v) == class) {
        members.insert(v);
        members.extend(g.neighbors(v).iter().copied().filter(|&w| !g.is_fake(w)));
    }
    let original: Vec<usize> = members.into_iter().collect();
    let mut local = vec![usize::MAX; g.node_count()];
    for (k, &v) in original.iter().enumerate() {
        local[v] = k;
    }
    let mut adjacency = vec![Vec::new(); original.len()];
    for (k, &v) in original.iter().enumerate() {
        for &w in g.neighbors(v) {
            if local[w] != usize::MAX {
                adjacency[k].push(local[w]);
            }
        }
        adjacency[k].sort_unstable();
    }
    let fake = vec![false; original.len()];
    Ok(PartialGraph {
        graph: Graph::from_parts(adjacency, fake),
        original,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConnectivityViolation {
    /// A class has nodes but none of them is interior.
    NoInteriorNodes { class: usize },
    /// The interior nodes of a class split into several components.
    DisconnectedInterior { class: usize, components: usize },
    /// A marginal node has no interior neighbor of its own class.
    MarginalWithoutInteriorNeighbor { node: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConnectivityReport {
    pub holds: bool,
    pub violations: Vec<ConnectivityViolation>,
}

/// Checks that, per class, the interior nodes induce a connected subgraph and
/// that each marginal node touches an interior node of its own class.
/// Classes without any node are skipped.
pub fn check_connectivity_assumption(
    g: &Graph,
    lab: &Labeling,
) -> Result<ConnectivityReport, GraphError> {
    let partition = classify_nodes(g, lab)?;
    let interior_mask = {
        let mut m = vec![false; g.node_count()];
        for &v in &partition.interior {
            m[v] = true;
        }
        m
    };
    let mut violations = Vec::new();
    for class in 0..lab.class_count() {
        let has_nodes = g.real_nodes().any(|v| lab.label(v) == class);
        if !has_nodes {
            continue;
        }
        let interior: Vec<usize> = partition
            .interior
            .iter()
            .copied()
            .filter(|&v| lab.label(v) == class)
            .collect();
        if interior.is_empty() {
            violations.push(ConnectivityViolation::NoInteriorNodes { class });
            continue;
        }
        let components = induced_components(g, &interior).len();
        if components > 1 {
            violations.push(ConnectivityViolation::DisconnectedInterior { class, components });
        }
    }
    for &v in &partition.marginal {
        let ok = g
            .neighbors(v)
            .iter()
            .any(|&w| interior_mask[w] && lab.label(w) == lab.label(v));
        if !ok {
            violations.push(ConnectivityViolation::MarginalWithoutInteriorNeighbor { node: v });
        }
    }
    Ok(ConnectivityReport {
        holds: violations.is_empty(),
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Triangles {0,1,2} and {3,4,5} joined by the edge 2-3.
    fn joined_triangles() -> (Graph, Labeling) {
        let g = Graph::build(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5), (2, 3)]).unwrap();
        let lab = Labeling::new(vec![0, 0, 0, 1, 1, 1], 2).unwrap();
        (g, lab)
    }

    #[test]
    fn single_edge_partitions() {
        let g = Graph::build(2, &[(0, 1)]).unwrap();
        let p = classify_nodes(&g, &Labeling::new(vec![0, 1], 2).unwrap()).unwrap();
        assert_eq!(p.marginal, vec![0, 1]);
        assert!(p.interior.is_empty());
        let p = classify_nodes(&g, &Labeling::new(vec![0, 0], 2).unwrap()).unwrap();
        assert!(p.marginal.is_empty());
        assert_eq!(p.interior, vec![0, 1]);
    }

    #[test]
    fn joined_triangles_marginal_pair() {
        let (g, lab) = joined_triangles();
        let p = classify_nodes(&g, &lab).unwrap();
        assert_eq!(p.marginal, vec![2, 3]);
        assert_eq!(p.interior, vec![0, 1, 4, 5]);
    }

    #[test]
    fn unlabeled_real_node_is_an_error() {
        let g = Graph::build(2, &[(0, 1)]).unwrap();
        let lab = Labeling::new(vec![0, 2], 2).unwrap();
        assert_eq!(classify_nodes(&g, &lab), Err(GraphError::Unlabeled(1)));
    }

    #[test]
    fn labeled_fake_class_rejected() {
        assert!(Labeling::with_mask(vec![0, 2], 2, vec![false, true]).is_err());
        assert!(Labeling::with_mask(vec![0, 3], 2, vec![false, false]).is_err());
    }

    #[test]
    fn partial_graph_of_joined_triangles() {
        let (g, lab) = joined_triangles();
        let p = partial_graph(&g, &lab, 0).unwrap();
        assert_eq!(p.original, vec![0, 1, 2, 3]);
        assert_eq!(p.graph.edge_count(), 4);
        assert_eq!(p.local_id(3), Some(3));
        assert_eq!(p.graph.degree(3), 1);
    }

    #[test]
    fn partial_graph_whole_and_empty() {
        let g = Graph::build(3, &[(0, 1), (1, 2)]).unwrap();
        let lab = Labeling::new(vec![0, 0, 0], 2).unwrap();
        let p = partial_graph(&g, &lab, 0).unwrap();
        assert_eq!(p.graph, g);
        let p = partial_graph(&g, &lab, 1).unwrap();
        assert_eq!(p.graph.node_count(), 0);
    }

    #[test]
    fn connectivity_cases() {
        let (g, lab) = joined_triangles();
        assert!(check_connectivity_assumption(&g, &lab).unwrap().holds);

        let g = Graph::build(2, &[(0, 1)]).unwrap();
        let r = check_connectivity_assumption(&g, &Labeling::new(vec![0, 1], 2).unwrap()).unwrap();
        assert!(!r.holds);
        assert!(r.violations.contains(&ConnectivityViolation::NoInteriorNodes { class: 0 }));

        // class 0 interior split into {0,1} and {3,4}
        let g = Graph::build(5, &[(0, 1), (3, 4)]).unwrap();
        let lab = Labeling::new(vec![0, 0, 1, 0, 0], 2).unwrap();
        let r = check_connectivity_assumption(&g, &lab).unwrap();
        assert_eq!(
            r.violations,
            vec![ConnectivityViolation::DisconnectedInterior { class: 0, components: 2 }]
        );
    }

    #[test]
    fn removing_cross_edges_empties_marginal_set() {
        let (g, lab) = joined_triangles();
        let kept: Vec<(usize, usize)> = g.edges().filter(|&(i, j)| lab.label(i) == lab.label(j)).collect();
        let g2 = Graph::build(6, &kept).unwrap();
        assert!(classify_nodes(&g2, &lab).unwrap().marginal.is_empty());
    }
}
