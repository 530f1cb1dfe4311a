//! Randomized checks of the degree-threshold theorem and the monotone
//! decrease of the ground truth's objective under augmentation.

use graphsgan_core::graph::classify_nodes;
use graphsgan_core::lab::{
    brute_force_min, corollary_check, label_propagation, random_theorem_instance, verify_perfect_classification,
    InstanceConfig, RegularizationProblem,
};
use graphsgan_core::rng::{substream, Stream};
use rand::Rng;

#[test]
fn exact_minimizer_is_ground_truth_after_augmentation() {
    let mut rng = substream(2024, Stream::Instances);
    let mut failures = Vec::new();
    for k in 0..200 {
        let inst = random_theorem_instance(&InstanceConfig::default(), &mut rng);
        let r = verify_perfect_classification(&inst.graph, &inst.ground_truth, 1.0, &inst.seeds, 1).unwrap();
        if !r.matches_ground_truth {
            failures.push((k, r.d0, r.minimum, r.ground_truth_objective));
        }
    }
    assert!(failures.is_empty(), "{failures:?}");
}

#[test]
fn larger_lambda_and_three_classes() {
    let mut rng = substream(7, Stream::Instances);
    let cfg = InstanceConfig {
        min_classes: 3,
        max_classes: 3,
        max_nodes: 11,
        ..InstanceConfig::default()
    };
    for _ in 0..30 {
        let inst = random_theorem_instance(&cfg, &mut rng);
        let r = verify_perfect_classification(&inst.graph, &inst.ground_truth, 3.0, &inst.seeds, 1).unwrap();
        assert!(r.matches_ground_truth);
    }
}

#[test]
fn ground_truth_objective_strictly_decreases() {
    let mut rng = substream(5, Stream::Instances);
    for _ in 0..100 {
        let inst = random_theorem_instance(&InstanceConfig::default(), &mut rng);
        let marginal = classify_nodes(&inst.graph, &inst.ground_truth).unwrap().marginal;
        let sequence: Vec<usize> = (0..rng.random_range(1..20)).map(|_| marginal[rng.random_range(0..marginal.len())]).collect();
        let problem = RegularizationProblem::new(inst.graph.clone(), inst.seeds.clone(), 1.0, inst.ground_truth.class_count()).unwrap();
        let report = corollary_check(&problem, &inst.ground_truth, &sequence).unwrap();
        assert!(report.holds);
        assert!(report.untouched_steps.is_empty());
        assert!(report.steps.iter().all(|s| s.strictly_decreased));
    }
}

#[test]
fn exhaustive_dominates_propagation() {
    let mut rng = substream(9, Stream::Instances);
    for _ in 0..50 {
        let inst = random_theorem_instance(&InstanceConfig::default(), &mut rng);
        let problem = RegularizationProblem::new(inst.graph.clone(), inst.seeds.clone(), 1.0, inst.ground_truth.class_count()).unwrap();
        let (_, best) = brute_force_min(&problem).unwrap();
        let lp = label_propagation(&problem, 100);
        assert!(best <= problem.objective(lp.labeling.labels()).unwrap() + 1e-12);
    }
}
