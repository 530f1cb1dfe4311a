//! End-to-end operations behind the command-line tool, usable from code.

use std::path::Path;

use anyhow::{Context, Result};
use graphsgan_core::dataset::{planted_partition, Dataset, Split};
use graphsgan_core::embedding::embed_graph;
use graphsgan_core::graph::classify_nodes;
use graphsgan_core::lab::{
    accuracy, adversarial_lp, label_propagation, random_theorem_instance, seeds_from_labeling,
    verify_perfect_classification, AdversarialLpConfig, RegularizationProblem,
};
use graphsgan_core::rng::{keyed_substream, Stream};
use graphsgan_core::trainer::{
    class_probabilities, fake_probability_means, prepare, train, PreparedDataset, TrainOutcome,
};
use graphsgan_core::Tensor;
use serde::Serialize;

use crate::checkpoint::{Checkpoint, CHECKPOINT_VERSION};
use crate::config::{DatasetSource, ExperimentConfig, LabConfig};
use crate::formats;
use crate::loader::{load_citation, load_dataset_dir};
use crate::metrics;

pub const EMBEDDING_FILE: &str = "embedding.txt";
pub const METRICS_FILE: &str = "metrics.csv";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const PREDICTIONS_FILE: &str = "predictions.csv";
pub const P_FAKE_FILE: &str = "p_fake.csv";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const SUMMARY_FILE: &str = "summary.json";

pub fn load_dataset(cfg: &ExperimentConfig) -> Result<Dataset> {
    Ok(match &cfg.dataset {
        DatasetSource::Planted(p) => planted_partition(p, cfg.seed).context("generating planted partition")?,
        DatasetSource::Directory { path } => load_dataset_dir(path, &cfg.split, cfg.seed)?,
        DatasetSource::Citation { path, name } => {
            let (data, stats) = load_citation(path, name, &cfg.split, cfg.seed)?;
            log::info!(
                "{name}: {} nodes, {} edges from {} links, {} classes",
                stats.nodes,
                stats.edges,
                stats.raw_links,
                stats.classes.len()
            );
            data
        }
    })
}

/// The configured structural embedding: read from `file` when given,
/// otherwise trained; `None` when embeddings are disabled.
pub fn embedding_for(cfg: &ExperimentConfig, data: &Dataset, file: Option<&Path>) -> Result<Option<Tensor>> {
    if !cfg.use_embedding {
        return Ok(None);
    }
    let vectors = match file {
        Some(p) => formats::read_dense_matrix(p)?,
        None => embed_graph(&data.graph, &cfg.embedding).context("training embedding")?.vectors,
    };
    Ok(Some(vectors))
}

pub fn prepare_inputs(cfg: &ExperimentConfig, data: &Dataset, embedding: Option<&Tensor>) -> Result<PreparedDataset> {
    Ok(prepare(data, embedding, cfg.train.fusion_alpha)?)
}

pub fn split_names(split: &Split) -> Vec<&'static str> {
    (0..split.train.len())
        .map(|v| {
            if split.train[v] {
                "train"
            } else if split.val[v] {
                "val"
            } else if split.test[v] {
                "test"
            } else {
                "none"
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalReport {
    pub dataset: String,
    pub train_accuracy: f64,
    pub val_accuracy: Option<f64>,
    pub test_accuracy: Option<f64>,
    /// Over every node outside the training split.
    pub unlabeled_accuracy: f64,
    pub mean_p_fake_unlabeled: f64,
    pub mean_p_fake_generated: f64,
}

fn nonempty_accuracy(pred: &[usize], truth: &[usize], nodes: &[usize]) -> Option<f64> {
    (!nodes.is_empty()).then(|| accuracy(pred, truth, nodes))
}

/// Predictions, fake probabilities and accuracies of a classifier on
/// prepared inputs.
pub fn evaluate(
    name: &str,
    ckpt: &mut Checkpoint,
    data: &PreparedDataset,
    eval_samples: usize,
    seed: u64,
) -> Result<(EvalReport, Vec<usize>, Vec<f64>)> {
    let (probs, p_fake) = class_probabilities(&mut ckpt.classifier, &data.inputs)?;
    let predicted = graphsgan_core::game::predict(&probs);
    let (real, generated) =
        fake_probability_means(&mut ckpt.classifier, &ckpt.generator, data, eval_samples, ckpt.noise_dim, seed)?;
    let s = &data.split;
    let report = EvalReport {
        dataset: name.to_owned(),
        train_accuracy: accuracy(&predicted, &data.labels, &s.train_nodes()),
        val_accuracy: nonempty_accuracy(&predicted, &data.labels, &s.val_nodes()),
        test_accuracy: nonempty_accuracy(&predicted, &data.labels, &s.test_nodes()),
        unlabeled_accuracy: accuracy(&predicted, &data.labels, &s.unlabeled_nodes()),
        mean_p_fake_unlabeled: real,
        mean_p_fake_generated: generated,
    };
    Ok((report, predicted, p_fake))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrainSummary {
    pub dataset: String,
    pub seed: u64,
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub stopped_early: bool,
    pub final_metrics: EvalReport,
}

pub struct TrainRun {
    pub prepared: PreparedDataset,
    pub outcome: TrainOutcome,
    pub checkpoint: Checkpoint,
    pub summary: TrainSummary,
    pub predicted: Vec<usize>,
    pub p_fake: Vec<f64>,
}

pub fn train_run(cfg: &ExperimentConfig, data: &Dataset, embedding: Option<&Tensor>) -> Result<TrainRun> {
    let prepared = prepare_inputs(cfg, data, embedding)?;
    let outcome = train(&prepared, &cfg.train, &cfg.game)?;
    let mut checkpoint = Checkpoint {
        version: CHECKPOINT_VERSION,
        dataset: data.name.clone(),
        seed: cfg.seed,
        input_dim: prepared.input_dim(),
        class_count: prepared.class_count,
        noise_dim: cfg.train.noise_dim,
        best_epoch: outcome.best_epoch,
        classifier: outcome.classifier.clone(),
        generator: outcome.generator.clone(),
    };
    let (report, predicted, p_fake) = evaluate(&data.name, &mut checkpoint, &prepared, cfg.train.eval_samples, cfg.seed)?;
    let summary = TrainSummary {
        dataset: data.name.clone(),
        seed: cfg.seed,
        epochs_run: outcome.history.len(),
        best_epoch: outcome.best_epoch,
        stopped_early: outcome.stopped_early,
        final_metrics: report,
    };
    Ok(TrainRun {
        prepared,
        outcome,
        checkpoint,
        summary,
        predicted,
        p_fake,
    })
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Metrics, predictions, fake probabilities, checkpoint and summary; the
/// diagnostics file only when diagnostics were recorded.
pub fn write_train_outputs(dir: &Path, data: &Dataset, run: &TrainRun) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    metrics::write_metrics_csv(&dir.join(METRICS_FILE), &run.outcome.history)?;
    let names = split_names(&data.split);
    metrics::write_predictions_csv(&dir.join(PREDICTIONS_FILE), &data.labels, &run.predicted, &run.p_fake, &names)?;
    formats::write_p_fake(&dir.join(P_FAKE_FILE), &run.p_fake)?;
    if !run.outcome.diagnostics.is_empty() {
        let partition = classify_nodes(&data.graph, &data.labeling())?;
        let marginal = partition.is_marginal_mask(data.node_count());
        metrics::write_diagnostics_csv(&dir.join(DIAGNOSTICS_FILE), &run.outcome.diagnostics, &marginal)?;
    }
    run.checkpoint.save(&dir.join(CHECKPOINT_FILE))?;
    write_json(&dir.join(SUMMARY_FILE), &run.summary)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TheoremCase {
    pub index: usize,
    pub nodes: usize,
    pub classes: usize,
    pub marginal_nodes: usize,
    pub d0: f64,
    pub target_degree: usize,
    pub fake_nodes: usize,
    pub minimum: f64,
    pub ground_truth_objective: f64,
    pub matches_ground_truth: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TheoremBatch {
    pub seed: u64,
    pub lambda: f64,
    pub margin: usize,
    pub instances: usize,
    pub matched: usize,
    pub cases: Vec<TheoremCase>,
}

/// Instance `i` is drawn from its own keyed stream, so any single case can be
/// reproduced from `(seed, i)`.
pub fn verify_random_theorems(count: usize, lab: &LabConfig, seed: u64) -> Result<TheoremBatch> {
    let mut cases = Vec::with_capacity(count);
    for index in 0..count {
        let mut rng = keyed_substream(seed, Stream::Instances, index as u64);
        let inst = random_theorem_instance(&lab.instance, &mut rng);
        let report = verify_perfect_classification(&inst.graph, &inst.ground_truth, lab.lambda, &inst.seeds, lab.margin)
            .with_context(|| format!("instance {index}"))?;
        cases.push(TheoremCase {
            index,
            nodes: inst.graph.node_count(),
            classes: inst.ground_truth.class_count(),
            marginal_nodes: classify_nodes(&inst.graph, &inst.ground_truth)?.marginal.len(),
            d0: report.d0,
            target_degree: report.target_degree,
            fake_nodes: report.fake_nodes,
            minimum: report.minimum,
            ground_truth_objective: report.ground_truth_objective,
            matches_ground_truth: report.matches_ground_truth,
        });
    }
    Ok(TheoremBatch {
        seed,
        lambda: lab.lambda,
        margin: lab.margin,
        instances: count,
        matched: cases.iter().filter(|c| c.matches_ground_truth).count(),
        cases,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdvLpReport {
    pub k: usize,
    pub tau: f64,
    pub r: usize,
    pub boosted: usize,
    /// Label propagation on the dataset's own graph.
    pub graph_lp_accuracy: f64,
    /// Label propagation on the kNN graph, no augmentation.
    pub knn_lp_accuracy: f64,
    pub adversarial_accuracy: f64,
}

/// All accuracies are over the nodes outside the training split.
pub fn adversarial_report(data: &PreparedDataset, p_fake: &[f64], cfg: &AdversarialLpConfig) -> Result<AdvLpReport> {
    let truth = data.labeling();
    let adversarial = adversarial_lp(&data.inputs, &truth, p_fake, cfg)?;
    let plain = adversarial_lp(&data.inputs, &truth, &vec![0.0; p_fake.len()], cfg)?;
    let problem = RegularizationProblem::new(data.graph.clone(), seeds_from_labeling(&truth), cfg.lambda, data.class_count)?;
    let graph_lp = label_propagation(&problem, cfg.max_iters);
    Ok(AdvLpReport {
        k: cfg.k,
        tau: cfg.tau,
        r: cfg.r,
        boosted: adversarial.boosted.len(),
        graph_lp_accuracy: accuracy(graph_lp.labeling.labels(), &data.labels, &data.split.unlabeled_nodes()),
        knn_lp_accuracy: plain.accuracy,
        adversarial_accuracy: adversarial.accuracy,
    })
}
