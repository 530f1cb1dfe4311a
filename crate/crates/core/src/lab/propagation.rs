use alloc::vec;
use alloc::vec::Vec;

use super::RegularizationProblem;
use crate::graph::{edge_weight, Labeling};

pub const DEFAULT_MAX_ITERS: usize = 1000;

#[derive(Clone, Debug, PartialEq)]
pub struct PropagationResult {
    pub labeling: Labeling,
    pub iterations: usize,
    /// False when `max_iters` ran out before the labels stopped changing.
    pub converged: bool,
    /// Real nodes no label reached; they were given class 0.
    pub unreachable: Vec<usize>,
}

/// Hard-label voting. Seeds are clamped. Every round, each other real node
/// takes the class with the largest total normalized weight among its
/// labeled real neighbors (lowest class on ties); nodes with no labeled
/// neighbor keep their state. Updates are synchronous and stop once a round
/// changes nothing.
pub fn label_propagation(problem: &RegularizationProblem, max_iters: usize) -> PropagationResult {
    let g = problem.graph();
    let classes = problem.class_count();
    let n = g.node_count();
    let mut current: Vec<Option<usize>> = vec![None; n];
    let mut clamped = vec![false; n];
    for s in problem.seeds() {
        current[s.node] = Some(s.class);
        clamped[s.node] = true;
    }
    let mut votes = vec![0.0; classes];
    let mut next = current.clone();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iters {
        iterations += 1;
        let mut changed = false;
        for v in g.real_nodes() {
            if clamped[v] {
                continue;
            }
            votes.iter_mut().for_each(|x| *x = 0.0);
            let mut any = false;
            for &w in g.neighbors(v) {
                if let Some(c) = current[w] {
                    votes[c] += edge_weight(g.degree(v), g.degree(w));
                    any = true;
                }
            }
            let label = if any {
                let mut best = 0;
                for c in 1..classes {
                    if votes[c] > votes[best] {
                        best = c;
                    }
                }
                Some(best)
            } else {
                current[v]
            };
            changed |= label != current[v];
            next[v] = label;
        }
        core::mem::swap(&mut current, &mut next);
        next.copy_from_slice(&current);
        if !changed {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("label propagation stopped after {max_iters} rounds without converging");
    }
    let mut unreachable = Vec::new();
    let mut labels = vec![classes; n];
    for v in g.real_nodes() {
        labels[v] = current[v].unwrap_or_else(|| {
            unreachable.push(v);
            0
        });
    }
    if !unreachable.is_empty() {
        log::warn!("{} nodes unreachable from any seed; assigned class 0", unreachable.len());
    }
    let labeling = Labeling::with_mask(labels, classes, clamped).expect("propagated labels are in range");
    PropagationResult {
        labeling,
        iterations,
        converged,
        unreachable,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use crate::lab::tests::joined_triangles;
    use crate::lab::{brute_force_min, seeds_from_labeling, Seed};

    #[test]
    fn two_node_path() {
        let g = Graph::build(2, &[(0, 1)]).unwrap();
        let p = RegularizationProblem::new(g, vec![Seed::new(1, 1)], 1.0, 3).unwrap();
        let r = label_propagation(&p, 10);
        assert_eq!(r.labeling.labels(), &[1, 1]);
        assert!(r.converged);
    }

    #[test]
    fn joined_triangles_recovered() {
        let (g, truth) = joined_triangles();
        let p = RegularizationProblem::new(g, seeds_from_labeling(&truth), 1.0, 2).unwrap();
        assert_eq!(label_propagation(&p, 10).labeling.labels(), truth.labels());
    }

    #[test]
    fn all_seeded_is_identity() {
        let (g, _) = joined_triangles();
        let labels = [1, 0, 1, 0, 1, 0];
        let seeds = labels.iter().enumerate().map(|(v, &c)| Seed::new(v, c)).collect();
        let p = RegularizationProblem::new(g, seeds, 1.0, 2).unwrap();
        let r = label_propagation(&p, 10);
        assert_eq!(r.labeling.labels(), &labels);
        assert_eq!(r.iterations, 1);
    }

    #[test]
    fn unreachable_nodes_get_class_zero() {
        let g = Graph::build(4, &[(0, 1), (2, 3)]).unwrap();
        let p = RegularizationProblem::new(g, vec![Seed::new(0, 1)], 1.0, 2).unwrap();
        let r = label_propagation(&p, 10);
        assert_eq!(r.labeling.labels(), &[1, 1, 0, 0]);
        assert_eq!(r.unreachable, vec![2, 3]);
    }

    #[test]
    fn exhaustive_never_worse() {
        let (g, truth) = joined_triangles();
        let p = RegularizationProblem::new(g, seeds_from_labeling(&truth), 1.0, 2).unwrap();
        let lp = label_propagation(&p, 100);
        let (_, best) = brute_force_min(&p).unwrap();
        assert!(best <= p.objective(lp.labeling.labels()).unwrap());
    }
}
