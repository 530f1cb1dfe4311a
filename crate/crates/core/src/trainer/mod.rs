//! Preprocessing, batch sampling, the alternating classifier/generator
//! training loop, and the gradient-norm diagnostics.

mod batch;
mod diagnostics;
mod prep;

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{self, ClassifierBatches, GameConfig, GameError, LossBreakdown};
use crate::nn::{AdamConfig, AdamState, ClassifierSpec, GeneratorSpec, Mode, Network, NnError};
use crate::rng::{keyed_substream, substream, Stream};
use crate::stats;
use crate::tensor::Tensor;

pub use batch::BatchSampler;
pub use diagnostics::{
    class_probabilities, feature_embeddings, input_gradient_norm, node_correlations, summarize_correlations,
    CorrelationSummary, DiagnosticRecord,
};
pub use prep::{neighbor_fusion, prepare, scale_to_unit, PreparedDataset, UnitScaling};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    Config(&'static str),
    #[error("{what}: expected {expected}, got {actual}")]
    Shape {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Game(GameError),
    #[error("classifier objective became non-finite at epoch {epoch}, step {step}")]
    Diverged { epoch: usize, step: usize },
    #[error("the training split is empty")]
    NoTrainingNodes,
    #[error("every node is in the training split")]
    NoUnlabeledNodes,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub batch_size: usize,
    /// Generator updates per classifier update.
    pub g_steps: usize,
    pub max_epochs: usize,
    pub batches_per_epoch: usize,
    /// Epochs without a validation improvement before stopping.
    pub patience: usize,
    pub fusion_alpha: f64,
    pub noise_dim: usize,
    pub seed: u64,
    pub classifier_hidden: Vec<usize>,
    pub generator_hidden: Vec<usize>,
    pub input_noise: f64,
    pub hidden_noise: f64,
    pub adam: AdamConfig,
    /// Record gradient norms and fake probabilities of every node each this
    /// many steps; 0 disables.
    pub diagnostics_every: usize,
    /// Generated samples scored per epoch for the metrics.
    pub eval_samples: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 64,
            g_steps: 2,
            max_epochs: 100,
            batches_per_epoch: 100,
            patience: 5,
            fusion_alpha: 0.7,
            noise_dim: 100,
            seed: 0,
            classifier_hidden: alloc::vec![500, 500, 250, 250, 250],
            generator_hidden: alloc::vec![500, 500],
            input_noise: 0.05,
            hidden_noise: 0.5,
            adam: AdamConfig::default(),
            diagnostics_every: 0,
            eval_samples: 256,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.batch_size < 2 {
            return Err(TrainError::Config("batch_size must be >= 2"));
        }
        if self.g_steps == 0 {
            return Err(TrainError::Config("g_steps must be >= 1"));
        }
        if self.batches_per_epoch == 0 || self.max_epochs == 0 {
            return Err(TrainError::Config("max_epochs and batches_per_epoch must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.fusion_alpha) {
            return Err(TrainError::Config("fusion_alpha must lie in [0, 1]"));
        }
        if self.noise_dim == 0 {
            return Err(TrainError::Config("noise_dim must be >= 1"));
        }
        if self.classifier_hidden.is_empty() || self.classifier_hidden.contains(&0) || self.generator_hidden.contains(&0) {
            return Err(TrainError::Config("classifier needs at least one hidden layer and no layer may be empty"));
        }
        if !(self.input_noise >= 0.0 && self.hidden_noise >= 0.0) {
            return Err(TrainError::Config("noise levels must be >= 0"));
        }
        if self.eval_samples < 2 {
            return Err(TrainError::Config("eval_samples must be >= 2"));
        }
        Ok(())
    }
}

/// One row of the metrics history.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    /// Means over the epoch's steps; generator terms average its inner steps.
    pub losses: LossBreakdown,
    pub train_accuracy: f64,
    pub val_accuracy: Option<f64>,
    pub test_accuracy: Option<f64>,
    /// Accuracy over every node outside the training split.
    pub unlabeled_accuracy: f64,
    pub mean_p_fake_real: f64,
    pub mean_p_fake_generated: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub classifier: Network,
    pub generator: Network,
    pub history: Vec<EpochMetrics>,
    /// Epoch whose networks were kept.
    pub best_epoch: usize,
    pub stopped_early: bool,
    pub diagnostics: Vec<DiagnosticRecord>,
}

pub fn gaussian_noise<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Tensor {
    let data = (0..rows * cols).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    Tensor::from_vec(rows, cols, data).expect("noise shape")
}

/// Samples from the generator in train mode (batch statistics) without
/// touching the given network's running statistics.
pub fn sample_generator<R: Rng + ?Sized>(generator: &Network, count: usize, noise_dim: usize, rng: &mut R) -> Result<Tensor, NnError> {
    let mut g = generator.clone();
    g.set_mode(Mode::Train);
    let z = gaussian_noise(count, noise_dim, rng);
    Ok(g.infer(&z, rng)?.0)
}

fn accuracy_on(pred: &[usize], labels: &[usize], nodes: &[usize]) -> Option<f64> {
    if nodes.is_empty() {
        None
    } else {
        Some(nodes.iter().filter(|&&v| pred[v] == labels[v]).count() as f64 / nodes.len() as f64)
    }
}

struct Evaluation {
    predictions: Vec<usize>,
    p_fake: Vec<f64>,
}

fn evaluate(classifier: &mut Network, data: &PreparedDataset) -> Result<Evaluation, TrainError> {
    let (probs, p_fake) = class_probabilities(classifier, &data.inputs)?;
    Ok(Evaluation {
        predictions: game::predict(&probs),
        p_fake,
    })
}

/// Class predictions of every node, predict mode.
pub fn predict_nodes(classifier: &mut Network, data: &PreparedDataset) -> Result<(Vec<usize>, Vec<f64>), TrainError> {
    let e = evaluate(classifier, data)?;
    Ok((e.predictions, e.p_fake))
}

/// Mean fake probability of the unlabeled real nodes and of `samples` fresh
/// generated inputs.
pub fn fake_probability_means(
    classifier: &mut Network,
    generator: &Network,
    data: &PreparedDataset,
    samples: usize,
    noise_dim: usize,
    seed: u64,
) -> Result<(f64, f64), TrainError> {
    let (_, p_fake) = class_probabilities(classifier, &data.inputs)?;
    let unlabeled: Vec<f64> = data.split.unlabeled_nodes().iter().map(|&v| p_fake[v]).collect();
    let mut rng = keyed_substream(seed, Stream::Noise, u32::MAX as u64);
    let generated = sample_generator(generator, samples, noise_dim, &mut rng)?;
    let (_, p_gen) = class_probabilities(classifier, &generated)?;
    Ok((stats::mean(&unlabeled), stats::mean(&p_gen)))
}

fn add_scaled(acc: &mut LossBreakdown, x: &LossBreakdown, w: f64) {
    acc.sup += w * x.sup;
    acc.un += w * x.un;
    acc.ent += w * x.ent;
    acc.pt_d += w * x.pt_d;
    acc.fm += w * x.fm;
    acc.pt_g += w * x.pt_g;
    acc.composite_d += w * x.composite_d;
    acc.composite_g += w * x.composite_g;
}

/// Alternates one classifier update with `g_steps` generator updates,
/// evaluates in predict mode after every epoch, and keeps the networks of the
/// epoch with the best validation accuracy (the last epoch when there is no
/// validation split).
pub fn train(data: &PreparedDataset, cfg: &TrainConfig, game_cfg: &GameConfig) -> Result<TrainOutcome, TrainError> {
    cfg.validate()?;
    game_cfg.validate().map_err(TrainError::Game)?;
    let labeled_pool = data.split.train_nodes();
    let unlabeled_pool = data.split.unlabeled_nodes();
    if labeled_pool.is_empty() {
        return Err(TrainError::NoTrainingNodes);
    }
    if unlabeled_pool.is_empty() {
        return Err(TrainError::NoUnlabeledNodes);
    }
    let val_nodes = data.split.val_nodes();
    let test_nodes = data.split.test_nodes();
    let m = cfg.batch_size;

    let mut init_rng = substream(cfg.seed, Stream::Init);
    let mut noise_rng = substream(cfg.seed, Stream::Noise);
    let mut batch_rng = substream(cfg.seed, Stream::Batching);

    let mut classifier = Network::classifier(
        &ClassifierSpec {
            input_dim: data.input_dim(),
            hidden: cfg.classifier_hidden.clone(),
            classes: data.class_count,
            input_noise: cfg.input_noise,
            hidden_noise: cfg.hidden_noise,
        },
        &mut init_rng,
    )?;
    let mut generator = Network::generator(
        &GeneratorSpec {
            noise_dim: cfg.noise_dim,
            hidden: cfg.generator_hidden.clone(),
            output_dim: data.input_dim(),
        },
        &mut init_rng,
    )?;
    let mut adam_d = AdamState::new(cfg.adam, classifier.params());
    let mut adam_g = AdamState::new(cfg.adam, generator.params());
    let mut labeled = BatchSampler::new(labeled_pool.clone());
    let mut unlabeled = BatchSampler::new(unlabeled_pool.clone());

    let mut history = Vec::new();
    let mut diagnostics = Vec::new();
    let mut best: Option<(f64, usize, Network, Network)> = None;
    let mut since_best = 0;
    let mut stopped_early = false;

    for epoch in 0..cfg.max_epochs {
        let mut sums = LossBreakdown::default();
        for b in 0..cfg.batches_per_epoch {
            let step = epoch * cfg.batches_per_epoch + b;
            let li = labeled.next_batch(m, &mut batch_rng);
            let ui = unlabeled.next_batch(m, &mut batch_rng);
            let xl = data.inputs.select_rows(&li);
            let yl: Vec<usize> = li.iter().map(|&v| data.labels[v]).collect();
            let xu = data.inputs.select_rows(&ui);
            let z = gaussian_noise(m, cfg.noise_dim, &mut noise_rng);
            let xg = generator.infer(&z, &mut noise_rng)?.0;
            let batches = ClassifierBatches {
                labeled: &xl,
                labels: &yl,
                unlabeled: &xu,
                generated: &xg,
            };
            let (d_losses, d_grads) = match game::classifier_objective(&mut classifier, &batches, game_cfg, &mut noise_rng) {
                Err(GameError::NonFinite(_)) => return Err(TrainError::Diverged { epoch, step }),
                other => other.map_err(TrainError::Game)?,
            };
            classifier.apply_adam(&mut adam_d, &d_grads);

            let mut g_mean = game::GeneratorLosses::default();
            for _ in 0..cfg.g_steps {
                let ri = unlabeled.next_batch(m, &mut batch_rng);
                let xr = data.inputs.select_rows(&ri);
                let z = gaussian_noise(m, cfg.noise_dim, &mut noise_rng);
                let (g_losses, g_grads) =
                    game::generator_objective(&mut classifier, &mut generator, &xr, &z, game_cfg, &mut noise_rng)
                        .map_err(TrainError::Game)?;
                generator.apply_adam(&mut adam_g, &g_grads);
                let w = 1.0 / cfg.g_steps as f64;
                g_mean.fm += w * g_losses.fm;
                g_mean.pt += w * g_losses.pt;
                g_mean.total += w * g_losses.total;
            }
            add_scaled(&mut sums, &LossBreakdown::new(&d_losses, &g_mean), 1.0 / cfg.batches_per_epoch as f64);

            if cfg.diagnostics_every > 0 && step % cfg.diagnostics_every == 0 {
                let norms = input_gradient_norm(&mut classifier, &data.inputs)?;
                let (_, p_fake) = class_probabilities(&mut classifier, &data.inputs)?;
                diagnostics.extend(norms.iter().zip(&p_fake).enumerate().map(|(node, (&g, &p))| DiagnosticRecord {
                    step,
                    node,
                    grad_norm: g,
                    p_fake: p,
                }));
            }
        }

        let eval = evaluate(&mut classifier, data)?;
        let unlabeled_p: Vec<f64> = unlabeled_pool.iter().map(|&v| eval.p_fake[v]).collect();
        let mut eval_rng = keyed_substream(cfg.seed, Stream::Noise, epoch as u64);
        let generated = sample_generator(&generator, cfg.eval_samples, cfg.noise_dim, &mut eval_rng)?;
        let (_, p_gen) = class_probabilities(&mut classifier, &generated)?;
        let metrics = EpochMetrics {
            epoch,
            losses: sums,
            train_accuracy: accuracy_on(&eval.predictions, &data.labels, &labeled_pool).unwrap_or(0.0),
            val_accuracy: accuracy_on(&eval.predictions, &data.labels, &val_nodes),
            test_accuracy: accuracy_on(&eval.predictions, &data.labels, &test_nodes),
            unlabeled_accuracy: accuracy_on(&eval.predictions, &data.labels, &unlabeled_pool).unwrap_or(0.0),
            mean_p_fake_real: stats::mean(&unlabeled_p),
            mean_p_fake_generated: stats::mean(&p_gen),
        };
        log::info!(
            "epoch {epoch}: composite_d {:.4} composite_g {:.4} val {:?} unlabeled {:.4}",
            metrics.losses.composite_d,
            metrics.losses.composite_g,
            metrics.val_accuracy,
            metrics.unlabeled_accuracy
        );
        let score = metrics.val_accuracy;
        history.push(metrics);

        match score {
            Some(score) => {
                if best.as_ref().is_none_or(|b| score > b.0) {
                    best = Some((score, epoch, classifier.clone(), generator.clone()));
                    since_best = 0;
                } else {
                    since_best += 1;
                    if since_best >= cfg.patience {
                        stopped_early = epoch + 1 < cfg.max_epochs;
                        break;
                    }
                }
            }
            None => best = Some((0.0, epoch, classifier.clone(), generator.clone())),
        }
    }
    let (_, best_epoch, classifier, generator) = best.expect("at least one epoch ran");
    Ok(TrainOutcome {
        classifier,
        generator,
        history,
        best_epoch,
        stopped_early,
        diagnostics,
    })
}
