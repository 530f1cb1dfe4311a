use alloc::vec;
use alloc::vec::Vec;

use super::{LabError, RegularizationProblem};
use crate::graph::Labeling;

/// Largest number of labelings [`brute_force_min`] will enumerate.
pub const ENUMERATION_BUDGET: u64 = 10_000_000;

/// Objective improvements smaller than this do not replace the incumbent.
const TIE_EPS: f64 = 1e-12;

struct Search<'a> {
    classes: usize,
    lambda: f64,
    /// Real nodes in ascending id order.
    order: &'a [usize],
    /// For each position, `(earlier position, weight)` of its real edges.
    back_edges: Vec<Vec<(usize, f64)>>,
    /// For each position, the seed on that node as `(class, loss)`.
    seed: Vec<Option<(usize, f64)>>,
    current: Vec<usize>,
    best: Vec<usize>,
    best_value: f64,
}

impl Search<'_> {
    fn run(&mut self, pos: usize, partial: f64) {
        if partial >= self.best_value - TIE_EPS {
            return;
        }
        if pos == self.order.len() {
            self.best_value = partial;
            self.best.copy_from_slice(&self.current);
            return;
        }
        for c in 0..self.classes {
            let mut cost = match self.seed[pos] {
                Some((class, loss)) if class != c => loss,
                _ => 0.0,
            };
            let mut smooth = 0.0;
            for &(q, w) in &self.back_edges[pos] {
                if self.current[q] != c {
                    smooth += w;
                }
            }
            cost += self.lambda * smooth;
            self.current[pos] = c;
            self.run(pos + 1, partial + cost);
        }
    }
}

/// Exact minimizer over every assignment of real classes to real nodes.
/// Seeds are soft: they only enter through the supervised term. Among
/// labelings within `1e-12` of the minimum, the lexicographically smallest
/// (by node id) wins. Fake nodes carry the fake label in the result.
pub fn brute_force_min(problem: &RegularizationProblem) -> Result<(Labeling, f64), LabError> {
    let g = problem.graph();
    let classes = problem.class_count();
    let order: Vec<usize> = g.real_nodes().collect();
    let size = libm::pow(classes as f64, order.len() as f64);
    if size > ENUMERATION_BUDGET as f64 {
        return Err(LabError::BudgetExceeded {
            classes,
            nodes: order.len(),
            budget: ENUMERATION_BUDGET,
        });
    }
    let mut position = vec![usize::MAX; g.node_count()];
    for (k, &v) in order.iter().enumerate() {
        position[v] = k;
    }
    let mut back_edges = vec![Vec::new(); order.len()];
    for &(i, j, w) in problem.weighted_edges() {
        let (pi, pj) = (position[i], position[j]);
        back_edges[pi.max(pj)].push((pi.min(pj), w));
    }
    let mut seed = vec![None; order.len()];
    for s in problem.seeds() {
        seed[position[s.node]] = Some((s.class, s.loss));
    }
    let mut search = Search {
        classes,
        lambda: problem.lambda(),
        order: &order,
        back_edges,
        seed,
        current: vec![0; order.len()],
        best: vec![0; order.len()],
        best_value: f64::INFINITY,
    };
    if classes > 0 {
        search.run(0, 0.0);
    }
    let mut labels = vec![classes; g.node_count()];
    for (k, &v) in order.iter().enumerate() {
        labels[v] = search.best[k];
    }
    let value = problem.objective_unchecked(&labels);
    let mut mask = vec![false; g.node_count()];
    for s in problem.seeds() {
        mask[s.node] = true;
    }
    Ok((Labeling::with_mask(labels, classes, mask)?, value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use crate::lab::tests::joined_triangles;
    use crate::lab::{seeds_from_labeling, Seed};
    use rand::{Rng, SeedableRng};

    /// Plain odometer enumeration, no pruning.
    fn naive(problem: &RegularizationProblem) -> f64 {
        let n = problem.graph().node_count();
        let m = problem.class_count();
        let mut labels = vec![0; n];
        let mut best = f64::INFINITY;
        loop {
            best = best.min(problem.objective(&labels).unwrap());
            let mut k = 0;
            while k < n {
                labels[k] += 1;
                if labels[k] < m {
                    break;
                }
                labels[k] = 0;
                k += 1;
            }
            if k == n {
                return best;
            }
        }
    }

    #[test]
    fn single_seed_large_lambda() {
        let g = Graph::build(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        let p = RegularizationProblem::new(g, vec![Seed::new(2, 1)], 50.0, 2).unwrap();
        let (lab, value) = brute_force_min(&p).unwrap();
        assert_eq!(lab.labels(), &[1, 1, 1, 1]);
        assert_eq!(value, 0.0);
    }

    #[test]
    fn joined_triangles_minimizer() {
        let (g, truth) = joined_triangles();
        let p = RegularizationProblem::new(g, seeds_from_labeling(&truth), 1.0, 2).unwrap();
        let (lab, value) = brute_force_min(&p).unwrap();
        assert_eq!(lab.labels(), truth.labels());
        assert!((value - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn zero_lambda_only_seeds_matter() {
        let (g, truth) = joined_triangles();
        let p = RegularizationProblem::new(g, seeds_from_labeling(&truth), 0.0, 2).unwrap();
        let (lab, value) = brute_force_min(&p).unwrap();
        assert_eq!(value, 0.0);
        assert_eq!(lab.label(0), 0);
        assert_eq!(lab.label(5), 1);
        // lexicographically smallest among optimal labelings
        assert_eq!(lab.labels(), &[0, 0, 0, 0, 0, 1]);
    }

    #[test]
    fn budget_enforced() {
        let g = Graph::build(15, &[]).unwrap();
        let p = RegularizationProblem::new(g, vec![], 1.0, 3).unwrap();
        assert!(matches!(brute_force_min(&p), Err(LabError::BudgetExceeded { .. })));
    }

    #[test]
    fn matches_naive_enumeration() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..30 {
            let n = rng.random_range(3..8);
            let mut edges = Vec::new();
            for i in 0..n {
                for j in i + 1..n {
                    if rng.random_bool(0.4) {
                        edges.push((i, j));
                    }
                }
            }
            let g = Graph::build(n, &edges).unwrap();
            let seeds = vec![
                Seed { node: 0, class: 0, loss: rng.random_range(0.1..2.0) },
                Seed { node: n - 1, class: 2, loss: rng.random_range(0.1..2.0) },
            ];
            let p = RegularizationProblem::new(g, seeds, rng.random_range(0.1..3.0), 3).unwrap();
            let (_, value) = brute_force_min(&p).unwrap();
            assert!((value - naive(&p)).abs() < 1e-12);
        }
    }
}
