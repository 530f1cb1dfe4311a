use alloc::vec;
use alloc::vec::Vec;

use super::Graph;

/// Raises every target's degree to at least `r` by attaching fresh fake
/// nodes, one edge each. Fake nodes are appended after the existing nodes,
/// target by target in ascending id order, and never shared between targets.
pub fn augment_degrees(g: &Graph, targets: &[usize], r: usize) -> Graph {
    let mut targets: Vec<usize> = targets.to_vec();
    targets.sort_unstable();
    targets.dedup();
    let mut adjacency: Vec<Vec<usize>> = (0..g.node_count()).map(|v| g.neighbors(v).to_vec()).collect();
    let mut fake = g.fake_flags().to_vec();
    for t in targets {
        let degree = adjacency[t].len();
        for _ in degree..r {
            let id = adjacency.len();
            adjacency.push(vec![t]);
            fake.push(true);
            adjacency[t].push(id);
        }
    }
    Graph::from_parts(adjacency, fake)
}
