use alloc::vec::Vec;

use super::{Graph, GraphError};
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Metric {
    #[default]
    Euclidean,
}

/// Symmetric k-nearest-neighbor graph over the rows of `features`.
///
/// `(i, j)` is an edge when `j` is among the `k` nearest rows to `i` or vice
/// versa. Distance ties go to the lower node id; coincident points are fine.
pub fn knn_graph(features: &Tensor, k: usize, metric: Metric) -> Result<Graph, GraphError> {
    let n = features.rows();
    if k == 0 || k >= n {
        return Err(GraphError::InvalidK { k, n });
    }
    let mut edges = Vec::with_capacity(n * k);
    let mut candidates: Vec<(f64, usize)> = Vec::with_capacity(n);
    for i in 0..n {
        candidates.clear();
        let a = features.row(i);
        for j in (0..n).filter(|&j| j != i) {
            let d = match metric {
                Metric::Euclidean => squared_distance(a, features.row(j)),
            };
            candidates.push((d, j));
        }
        let cmp = |x: &(f64, usize), y: &(f64, usize)| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1));
        if k < candidates.len() {
            candidates.select_nth_unstable_by(k - 1, cmp);
        }
        edges.extend(candidates[..k].iter().map(|&(_, j)| (i.min(j), i.max(j))));
    }
    edges.sort_unstable();
    edges.dedup();
    Graph::build(n, &edges)
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
