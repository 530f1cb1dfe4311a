//! Undirected graphs with real and fake (generated) nodes.

mod augment;
mod knn;
mod labels;

pub use augment::augment_degrees;
pub use knn::{knn_graph, Metric};
pub use labels::{
    check_connectivity_assumption, classify_nodes, partial_graph, ConnectivityReport,
    ConnectivityViolation, Labeling, NodePartition, PartialGraph,
};

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("edge ({0}, {1}) references a node outside 0..{2}")]
    NodeOutOfRange(usize, usize, usize),
    #[error("self-loop on node {0}")]
    SelfLoop(usize),
    #[error("({0}, {1}) is not an edge")]
    NotAnEdge(usize, usize),
    #[error("node {0} is a real node without a ground-truth label")]
    Unlabeled(usize),
    #[error("label {label} of node {node} is outside 0..{classes}")]
    LabelOutOfRange { node: usize, label: usize, classes: usize },
    #[error("labeling covers {labels} nodes but the graph has {nodes}")]
    LabelingSize { labels: usize, nodes: usize },
    #[error("k = {k} must satisfy 1 <= k < {n}")]
    InvalidK { k: usize, n: usize },
    #[error("feature rows have inconsistent widths")]
    RaggedFeatures,
}

/// Immutable undirected simple graph.
///
/// Adjacency lists are kept sorted, so edge lookups are binary searches and
/// iteration order is deterministic. Nodes flagged as fake only come out of
/// [`augment_degrees`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Graph {
    adjacency: Vec<Vec<usize>>,
    fake: Vec<bool>,
    edge_count: usize,
}

impl Graph {
    /// Builds a graph of `node_count` real nodes. Duplicate edges (in either
    /// orientation) are dropped.
    pub fn build(node_count: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        let mut adjacency = vec![Vec::new(); node_count];
        for &(i, j) in edges {
            if i >= node_count || j >= node_count {
                return Err(GraphError::NodeOutOfRange(i, j, node_count));
            }
            if i == j {
                return Err(GraphError::SelfLoop(i));
            }
            adjacency[i].push(j);
            adjacency[j].push(i);
        }
        let mut duplicates = 0usize;
        for list in adjacency.iter_mut() {
            list.sort_unstable();
            let before = list.len();
            list.dedup();
            duplicates += before - list.len();
        }
        if duplicates > 0 {
            log::debug!("dropped {} duplicate edge(s)", duplicates / 2);
        }
        let edge_count = adjacency.iter().map(Vec::len).sum::<usize>() / 2;
        Ok(Graph {
            adjacency,
            fake: vec![false; node_count],
            edge_count,
        })
    }

    pub fn empty() -> Self {
        Graph {
            adjacency: Vec::new(),
            fake: Vec::new(),
            edge_count: 0,
        }
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adjacency[node].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adjacency.iter().map(Vec::len).collect()
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.adjacency[node]
    }

    pub fn is_fake(&self, node: usize) -> bool {
        self.fake[node]
    }

    pub fn fake_flags(&self) -> &[bool] {
        &self.fake
    }

    pub fn real_count(&self) -> usize {
        self.fake.iter().filter(|f| !**f).count()
    }

    pub fn fake_count(&self) -> usize {
        self.node_count() - self.real_count()
    }

    pub fn real_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.node_count()).filter(move |&i| !self.fake[i])
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i < self.node_count() && self.adjacency[i].binary_search(&j).is_ok()
    }

    /// Every edge once, as `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(i, list)| list.iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
    }

    /// Edges whose endpoints are both real nodes.
    pub fn real_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges().filter(move |&(i, j)| !self.fake[i] && !self.fake[j])
    }

    /// Entry of the negative normalized Laplacian, `1 / sqrt(deg(i) deg(j))`.
    ///
    /// Degrees include fake attachments. Asking for a non-edge is an error
    /// rather than zero.
    pub fn normalized_weight(&self, i: usize, j: usize) -> Result<f64, GraphError> {
        if !self.has_edge(i, j) {
            return Err(GraphError::NotAnEdge(i, j));
        }
        Ok(edge_weight(self.degree(i), self.degree(j)))
    }

    pub(crate) fn from_parts(adjacency: Vec<Vec<usize>>, fake: Vec<bool>) -> Self {
        let edge_count = adjacency.iter().map(Vec::len).sum::<usize>() / 2;
        Graph {
            adjacency,
            fake,
            edge_count,
        }
    }
}

#[inline]
pub(crate) fn edge_weight(deg_i: usize, deg_j: usize) -> f64 {
    1.0 / crate::math::sqrt((deg_i * deg_j) as f64)
}

/// Connected components of the subgraph induced on `members`, as lists of
/// original node ids. `members` must be sorted.
pub(crate) fn induced_components(g: &Graph, members: &[usize]) -> Vec<Vec<usize>> {
    let mut seen = vec![false; g.node_count()];
    let mut inside = vec![false; g.node_count()];
    for &m in members {
        inside[m] = true;
    }
    let mut components = Vec::new();
    for &start in members {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut stack = vec![start];
        let mut comp = Vec::new();
        while let Some(v) = stack.pop() {
            comp.push(v);
            for &w in g.neighbors(v) {
                if inside[w] && !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        comp.sort_unstable();
        components.push(comp);
    }
    components
}
