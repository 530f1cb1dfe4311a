use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{brute_force_min, LabError, RegularizationProblem, Seed};
use crate::graph::{augment_degrees, check_connectivity_assumption, classify_nodes, partial_graph, Graph, Labeling};
use crate::math;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassStats {
    pub class: usize,
    /// Edges of the class's partial graph whose endpoints are both marginal.
    pub marginal_edges: usize,
    /// Largest degree, measured in the full graph, among the partial graph's
    /// nodes.
    pub max_degree: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct D0Report {
    pub d0: f64,
    pub classes: Vec<ClassStats>,
}

/// `d0 = max(max_c m_c^2 deg_c, max over seeds s of class c of lambda m_c / loss_s)`
/// where `m_c` and `deg_c` come from [`ClassStats`]. Requires the
/// connectivity assumption on `ground_truth`.
pub fn compute_d0(g: &Graph, ground_truth: &Labeling, lambda: f64, seeds: &[Seed]) -> Result<D0Report, LabError> {
    let report = check_connectivity_assumption(g, ground_truth)?;
    if !report.holds {
        return Err(LabError::Assumption(report.violations));
    }
    let marginal = classify_nodes(g, ground_truth)?.is_marginal_mask(g.node_count());
    let mut classes = Vec::with_capacity(ground_truth.class_count());
    let mut d0: f64 = 0.0;
    for class in 0..ground_truth.class_count() {
        let part = partial_graph(g, ground_truth, class)?;
        let marginal_edges = part
            .graph
            .edges()
            .filter(|&(a, b)| marginal[part.original[a]] && marginal[part.original[b]])
            .count();
        let max_degree = part.original.iter().map(|&v| g.degree(v)).max().unwrap_or(0);
        let m = marginal_edges as f64;
        d0 = d0.max(m * m * max_degree as f64);
        for s in seeds.iter().filter(|s| s.class == class) {
            d0 = d0.max(lambda * m / s.loss);
        }
        classes.push(ClassStats {
            class,
            marginal_edges,
            max_degree,
        });
    }
    Ok(D0Report { d0, classes })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    pub d0: f64,
    pub classes: Vec<ClassStats>,
    /// Degree every marginal node was raised to.
    pub target_degree: usize,
    #[serde(skip)]
    pub augmented_graph: Graph,
    pub fake_nodes: usize,
    pub exact_minimizer: Vec<usize>,
    pub minimum: f64,
    pub ground_truth_objective: f64,
    pub matches_ground_truth: bool,
}

/// Raises every marginal node to degree `ceil(d0) + margin`, minimizes the
/// objective exhaustively on the augmented graph, and compares the minimizer
/// with the ground truth on real nodes.
pub fn verify_perfect_classification(
    g: &Graph,
    ground_truth: &Labeling,
    lambda: f64,
    seeds: &[Seed],
    margin: usize,
) -> Result<TheoremReport, LabError> {
    let D0Report { d0, classes } = compute_d0(g, ground_truth, lambda, seeds)?;
    let target_degree = math::ceil(d0) as usize + margin;
    let marginal = classify_nodes(g, ground_truth)?.marginal;
    let augmented = augment_degrees(g, &marginal, target_degree);
    let problem = RegularizationProblem::new(augmented, seeds.to_vec(), lambda, ground_truth.class_count())?;
    let (minimizer, minimum) = brute_force_min(&problem)?;
    let truth = ground_truth.extend_to(problem.graph());
    let ground_truth_objective = problem.objective(truth.labels())?;
    let matches_ground_truth = g.real_nodes().all(|v| minimizer.label(v) == ground_truth.label(v));
    let augmented_graph = problem.graph().clone();
    Ok(TheoremReport {
        d0,
        classes,
        target_degree,
        fake_nodes: augmented_graph.fake_count(),
        augmented_graph,
        exact_minimizer: minimizer.labels().to_vec(),
        minimum,
        ground_truth_objective,
        matches_ground_truth,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorollaryStep {
    /// Node that received one new fake neighbor.
    pub target: usize,
    /// Whether `target` is an endpoint of a real edge whose endpoints carry
    /// different ground-truth labels.
    pub touches_disagreeing_edge: bool,
    pub objective: f64,
    pub strictly_decreased: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorollaryReport {
    pub initial_objective: f64,
    pub steps: Vec<CorollaryStep>,
    /// Every step touching a disagreeing edge strictly lowered the objective.
    pub holds: bool,
    /// Steps that touched no disagreeing edge; the objective cannot move there.
    pub untouched_steps: Vec<usize>,
}

/// Attaches one fake node per entry of `sequence`, in order, and tracks the
/// ground truth's objective after each attachment.
pub fn corollary_check(
    problem: &RegularizationProblem,
    ground_truth: &Labeling,
    sequence: &[usize],
) -> Result<CorollaryReport, LabError> {
    let mut current = problem.clone();
    let initial_objective = current.objective(ground_truth.extend_to(current.graph()).labels())?;
    let mut previous = initial_objective;
    let mut steps = Vec::with_capacity(sequence.len());
    let mut untouched_steps = Vec::new();
    let mut holds = true;
    for (k, &target) in sequence.iter().enumerate() {
        let g = current.graph();
        if target >= g.node_count() || g.is_fake(target) {
            return Err(LabError::SeedNotReal(target));
        }
        let touches_disagreeing_edge = g
            .neighbors(target)
            .iter()
            .any(|&w| !g.is_fake(w) && ground_truth.label(w) != ground_truth.label(target));
        let grown = augment_degrees(g, &[target], g.degree(target) + 1);
        current = current.with_graph(grown)?;
        let objective = current.objective(ground_truth.extend_to(current.graph()).labels())?;
        let strictly_decreased = objective < previous;
        if touches_disagreeing_edge {
            holds &= strictly_decreased;
        } else {
            untouched_steps.push(k);
        }
        steps.push(CorollaryStep {
            target,
            touches_disagreeing_edge,
            objective,
            strictly_decreased,
        });
        previous = objective;
    }
    Ok(CorollaryReport {
        initial_objective,
        steps,
        holds,
        untouched_steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use crate::lab::seeds_from_labeling;
    use crate::lab::tests::joined_triangles;

    #[test]
    fn joined_triangles_d0() {
        let (g, truth) = joined_triangles();
        let r = compute_d0(&g, &truth, 1.0, &seeds_from_labeling(&truth)).unwrap();
        assert_eq!(r.d0, 3.0);
        for c in &r.classes {
            assert_eq!((c.marginal_edges, c.max_degree), (1, 3));
        }
    }

    #[test]
    fn no_cross_edges_gives_zero() {
        let g = Graph::build(4, &[(0, 1), (2, 3)]).unwrap();
        let truth = Labeling::new(vec![0, 0, 1, 1], 2).unwrap();
        assert_eq!(compute_d0(&g, &truth, 1.0, &[Seed::new(0, 0)]).unwrap().d0, 0.0);
    }

    #[test]
    fn lambda_branch() {
        let (g, truth) = joined_triangles();
        let seeds = seeds_from_labeling(&truth);
        let doubled = compute_d0(&g, &truth, 2.0, &seeds).unwrap().d0;
        assert_eq!(doubled, 3.0);
        assert_eq!(compute_d0(&g, &truth, 10.0, &seeds).unwrap().d0, 10.0);
    }

    #[test]
    fn assumption_violation_is_an_error() {
        // class 0 has no interior node
        let g = Graph::build(3, &[(0, 1), (1, 2)]).unwrap();
        let truth = Labeling::new(vec![0, 1, 1], 2).unwrap();
        assert!(matches!(compute_d0(&g, &truth, 1.0, &[]), Err(LabError::Assumption(_))));
    }

    #[test]
    fn joined_triangles_theorem() {
        let (g, truth) = joined_triangles();
        let r = verify_perfect_classification(&g, &truth, 1.0, &seeds_from_labeling(&truth), 1).unwrap();
        assert_eq!(r.target_degree, 4);
        assert!(r.matches_ground_truth);
        assert_eq!(r.fake_nodes, 2);
    }

    #[test]
    fn corollary_sequence() {
        let (g, truth) = joined_triangles();
        let p = RegularizationProblem::new(g, seeds_from_labeling(&truth), 1.0, 2).unwrap();
        let r = corollary_check(&p, &truth, &[2, 2, 2]).unwrap();
        assert!((r.initial_objective - 1.0 / 3.0).abs() < 1e-15);
        let expected = [1.0 / 12f64.sqrt(), 1.0 / 15f64.sqrt(), 1.0 / 18f64.sqrt()];
        for (s, e) in r.steps.iter().zip(expected) {
            assert!((s.objective - e).abs() < 1e-15);
        }
        assert!(r.holds);
    }

    #[test]
    fn corollary_untouched_and_empty() {
        let (g, truth) = joined_triangles();
        let p = RegularizationProblem::new(g, seeds_from_labeling(&truth), 1.0, 2).unwrap();
        let r = corollary_check(&p, &truth, &[0]).unwrap();
        assert_eq!(r.steps[0].objective, r.initial_objective);
        assert_eq!(r.untouched_steps, vec![0]);
        assert!(r.holds);
        assert!(corollary_check(&p, &truth, &[]).unwrap().holds);
    }
}
