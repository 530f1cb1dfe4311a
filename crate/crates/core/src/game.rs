//! The generator/classifier game: five loss terms, two composite
//! objectives, and prediction from the `(M + 1)`-way softmax.
//!
//! Every loss is recorded on a [`Tape`] so the same code serves the tensor-level
//! functions (`loss_sup`, `loss_un`, ...) and the differentiable objectives.

use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::nn::{Network, NnError, Tape, Var};
use crate::tensor::Tensor;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GameError {
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error("trade-off weight {name} must be >= 0, got {value}")]
    NegativeWeight { name: &'static str, value: f64 },
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("{what}: {actual} rows, expected {expected}")]
    BatchShape {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("non-finite {0} loss")]
    NonFinite(&'static str),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FmNorm {
    /// Squared Euclidean distance between batch centers.
    #[default]
    L2,
    /// L1 distance between batch centers.
    L1,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GameConfig {
    /// Weight of the real/fake term in the classifier objective.
    pub lambda0: f64,
    /// Weight of the entropy term in the classifier objective.
    pub lambda1: f64,
    /// Weight of the pull-away term in the generator objective.
    pub lambda2: f64,
    pub fm_norm: FmNorm,
}

impl Default for GameConfig {
    fn default() -> Self {
        GameConfig {
            lambda0: 2.0,
            lambda1: 1.0,
            lambda2: 0.3,
            fm_norm: FmNorm::L2,
        }
    }
}

impl GameConfig {
    pub fn validate(&self) -> Result<(), GameError> {
        for (name, value) in [("lambda0", self.lambda0), ("lambda1", self.lambda1), ("lambda2", self.lambda2)] {
            if !(value >= 0.0) {
                return Err(GameError::NegativeWeight { name, value });
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DiscriminatorLosses {
    pub sup: f64,
    pub un: f64,
    pub ent: f64,
    pub pt: f64,
    /// `sup + lambda0 un + lambda1 ent + pt`
    pub total: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GeneratorLosses {
    pub fm: f64,
    pub pt: f64,
    /// `fm + lambda2 pt`
    pub total: f64,
}

/// All loss terms of one training step. The pull-away term appears twice:
/// over real features for the classifier and over generated features for the
/// generator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub sup: f64,
    pub un: f64,
    pub ent: f64,
    pub pt_d: f64,
    pub fm: f64,
    pub pt_g: f64,
    pub composite_d: f64,
    pub composite_g: f64,
}

impl LossBreakdown {
    pub fn new(d: &DiscriminatorLosses, g: &GeneratorLosses) -> Self {
        LossBreakdown {
            sup: d.sup,
            un: d.un,
            ent: d.ent,
            pt_d: d.pt,
            fm: g.fm,
            pt_g: g.pt,
            composite_d: d.total,
            composite_g: g.total,
        }
    }
}

/// Views of the classifier output on the tape.
#[derive(Clone, Copy, Debug)]
pub struct ClassifierOutputs {
    /// `[b, M + 1]`, last column fake.
    pub probs: Var,
    /// `P(y | x, y < M)`, `[b, M]`.
    pub conditional: Var,
    /// `P(M | x)`, `[b, 1]`.
    pub p_fake: Var,
}

pub fn record_outputs(tape: &mut Tape, logits: Var) -> ClassifierOutputs {
    let m = tape.value(logits).cols();
    let probs = tape.softmax_fake(logits);
    let real = tape.slice_cols(probs, 0, m);
    let p_fake = tape.slice_cols(probs, m, 1);
    let total = tape.row_sum(real);
    let conditional = tape.div_by_col(real, total);
    ClassifierOutputs {
        probs,
        conditional,
        p_fake,
    }
}

/// Mean negative log conditional probability of the true labels.
pub fn record_loss_sup(tape: &mut Tape, conditional: Var, labels: &[usize]) -> Var {
    let picked = tape.gather(conditional, labels);
    let logs = tape.log(picked);
    let mean = tape.mean(logs);
    tape.scale(mean, -1.0)
}

/// `-mean log(1 - p_fake(real)) - mean log p_fake(generated)`.
pub fn record_loss_un(tape: &mut Tape, p_fake_real: Var, p_fake_gen: Var) -> Var {
    let one_minus = tape.affine(p_fake_real, -1.0, 1.0);
    let a = tape.log(one_minus);
    let a = tape.mean(a);
    let b = tape.log(p_fake_gen);
    let b = tape.mean(b);
    let s = tape.add(a, b);
    tape.scale(s, -1.0)
}

/// Mean Shannon entropy (nats) of the conditional class distribution.
pub fn record_loss_ent(tape: &mut Tape, conditional: Var) -> Var {
    let rows = tape.value(conditional).rows() as f64;
    let logs = tape.log(conditional);
    let plogp = tape.mul(conditional, logs);
    let total = tape.sum(plogp);
    tape.scale(total, -1.0 / rows)
}

pub fn record_loss_pt(tape: &mut Tape, features: Var) -> Var {
    tape.pull_away(features)
}

/// Distance between the batch centers of real and generated features.
pub fn record_loss_fm(tape: &mut Tape, real_features: Var, gen_features: Var, norm: FmNorm) -> Var {
    let a = tape.mean_rows(real_features);
    let b = tape.mean_rows(gen_features);
    let d = tape.sub(a, b);
    let e = match norm {
        FmNorm::L2 => tape.square(d),
        FmNorm::L1 => tape.abs(d),
    };
    tape.sum(e)
}

fn column(values: &[f64]) -> Tensor {
    Tensor::from_vec(values.len(), 1, values.to_vec()).expect("column")
}

/// Splits logits into the `M` real-class probabilities and the fake
/// probability, with the fake logit fixed at zero.
pub fn softmax_fake(logits: &Tensor) -> (Tensor, Vec<f64>) {
    let mut tape = Tape::new();
    let z = tape.constant(logits.clone());
    let out = record_outputs(&mut tape, z);
    let probs = tape.value(out.probs);
    let m = logits.cols();
    let mut class_probs = Tensor::zeros(probs.rows(), m);
    for r in 0..probs.rows() {
        class_probs.row_mut(r).copy_from_slice(&probs.row(r)[..m]);
    }
    (class_probs, tape.value(out.p_fake).data().to_vec())
}

fn conditional_of(tape: &mut Tape, class_probs: &Tensor) -> Var {
    let p = tape.constant(class_probs.clone());
    let s = tape.row_sum(p);
    tape.div_by_col(p, s)
}

/// Cross-entropy of `labels` under `class_probs` renormalized over the real
/// classes.
pub fn loss_sup(class_probs: &Tensor, labels: &[usize]) -> Result<f64, GameError> {
    check_labels(labels, class_probs.cols())?;
    let mut tape = Tape::new();
    let c = conditional_of(&mut tape, class_probs);
    let l = record_loss_sup(&mut tape, c, labels);
    Ok(tape.value(l).item())
}

pub fn loss_un(p_fake_real: &[f64], p_fake_gen: &[f64]) -> f64 {
    let mut tape = Tape::new();
    let a = tape.constant(column(p_fake_real));
    let b = tape.constant(column(p_fake_gen));
    let l = record_loss_un(&mut tape, a, b);
    tape.value(l).item()
}

pub fn loss_ent(class_probs: &Tensor) -> f64 {
    let mut tape = Tape::new();
    let c = conditional_of(&mut tape, class_probs);
    let l = record_loss_ent(&mut tape, c);
    tape.value(l).item()
}

pub fn loss_pt(features: &Tensor) -> f64 {
    let mut tape = Tape::new();
    let h = tape.constant(features.clone());
    let l = record_loss_pt(&mut tape, h);
    tape.value(l).item()
}

pub fn loss_fm(real_features: &Tensor, gen_features: &Tensor, norm: FmNorm) -> f64 {
    let mut tape = Tape::new();
    let a = tape.constant(real_features.clone());
    let b = tape.constant(gen_features.clone());
    let l = record_loss_fm(&mut tape, a, b, norm);
    tape.value(l).item()
}

/// Generator loss terms given feature-layer outputs directly.
pub fn generator_losses(real_features: &Tensor, gen_features: &Tensor, cfg: &GameConfig) -> GeneratorLosses {
    let fm = loss_fm(real_features, gen_features, cfg.fm_norm);
    let pt = loss_pt(gen_features);
    GeneratorLosses {
        fm,
        pt,
        total: fm + cfg.lambda2 * pt,
    }
}

/// Argmax over the real classes; ties go to the lowest class index.
pub fn predict(class_probs: &Tensor) -> Vec<usize> {
    (0..class_probs.rows())
        .map(|r| {
            let row = class_probs.row(r);
            let mut best = 0;
            for (c, &p) in row.iter().enumerate().skip(1) {
                if p > row[best] {
                    best = c;
                }
            }
            best
        })
        .collect()
}

fn check_labels(labels: &[usize], classes: usize) -> Result<(), GameError> {
    match labels.iter().find(|&&l| l >= classes) {
        Some(&label) => Err(GameError::LabelOutOfRange { label, classes }),
        None => Ok(()),
    }
}

/// The three batches a classifier step consumes.
#[derive(Clone, Copy, Debug)]
pub struct ClassifierBatches<'a> {
    pub labeled: &'a Tensor,
    pub labels: &'a [usize],
    pub unlabeled: &'a Tensor,
    pub generated: &'a Tensor,
}

/// Classifier objective and its gradients with respect to the classifier's
/// parameters. The pull-away term runs over the labeled and unlabeled
/// features together; the real/fake term ignores the labeled batch.
pub fn classifier_objective<R: Rng + ?Sized>(
    classifier: &mut Network,
    batches: &ClassifierBatches<'_>,
    cfg: &GameConfig,
    rng: &mut R,
) -> Result<(DiscriminatorLosses, Vec<Tensor>), GameError> {
    cfg.validate()?;
    if batches.labels.len() != batches.labeled.rows() {
        return Err(GameError::BatchShape {
            what: "labels",
            expected: batches.labeled.rows(),
            actual: batches.labels.len(),
        });
    }
    let mut tape = Tape::new();
    let binding = classifier.bind(&mut tape, true);
    let xl = tape.constant(batches.labeled.clone());
    let xu = tape.constant(batches.unlabeled.clone());
    let xg = tape.constant(batches.generated.clone());
    let fl = classifier.forward(&mut tape, &binding, xl, rng)?;
    let fu = classifier.forward(&mut tape, &binding, xu, rng)?;
    let fg = classifier.forward(&mut tape, &binding, xg, rng)?;
    check_labels(batches.labels, tape.value(fl.output).cols())?;
    let ol = record_outputs(&mut tape, fl.output);
    let ou = record_outputs(&mut tape, fu.output);
    let og = record_outputs(&mut tape, fg.output);

    let sup = record_loss_sup(&mut tape, ol.conditional, batches.labels);
    let un = record_loss_un(&mut tape, ou.p_fake, og.p_fake);
    let ent = record_loss_ent(&mut tape, ou.conditional);
    let real_features = tape.concat_rows(&[fl.features, fu.features]);
    let pt = record_loss_pt(&mut tape, real_features);

    let un_w = tape.scale(un, cfg.lambda0);
    let ent_w = tape.scale(ent, cfg.lambda1);
    let total = tape.add(sup, un_w);
    let total = tape.add(total, ent_w);
    let total = tape.add(total, pt);

    let losses = DiscriminatorLosses {
        sup: tape.value(sup).item(),
        un: tape.value(un).item(),
        ent: tape.value(ent).item(),
        pt: tape.value(pt).item(),
        total: tape.value(total).item(),
    };
    if !losses.total.is_finite() {
        return Err(GameError::NonFinite("classifier"));
    }
    let mut grads = tape.backward(total)?;
    Ok((losses, binding.gradients(&tape, &mut grads)))
}

/// Generator objective and its gradients with respect to the generator's
/// parameters. The classifier is recorded with constant parameters, so
/// gradients reach the generator through the classifier's feature map while
/// the classifier itself is untouched (its running state included: it has
/// none). The pull-away term runs over generated features only.
pub fn generator_objective<R: Rng + ?Sized>(
    classifier: &mut Network,
    generator: &mut Network,
    real_batch: &Tensor,
    noise_batch: &Tensor,
    cfg: &GameConfig,
    rng: &mut R,
) -> Result<(GeneratorLosses, Vec<Tensor>), GameError> {
    cfg.validate()?;
    let mut tape = Tape::new();
    let gen_binding = generator.bind(&mut tape, true);
    let cls_binding = classifier.bind(&mut tape, false);
    let z = tape.constant(noise_batch.clone());
    let generated = generator.forward(&mut tape, &gen_binding, z, rng)?.output;
    let xr = tape.constant(real_batch.clone());
    let fr = classifier.forward(&mut tape, &cls_binding, xr, rng)?;
    let fg = classifier.forward(&mut tape, &cls_binding, generated, rng)?;

    let fm = record_loss_fm(&mut tape, fr.features, fg.features, cfg.fm_norm);
    let pt = record_loss_pt(&mut tape, fg.features);
    let pt_w = tape.scale(pt, cfg.lambda2);
    let total = tape.add(fm, pt_w);
    let losses = GeneratorLosses {
        fm: tape.value(fm).item(),
        pt: tape.value(pt).item(),
        total: tape.value(total).item(),
    };
    if !losses.total.is_finite() {
        return Err(GameError::NonFinite("generator"));
    }
    let mut grads = tape.backward(total)?;
    Ok((losses, gen_binding.gradients(&tape, &mut grads)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use core::f64::consts::LN_2;

    fn t(rows: usize, cols: usize, v: &[f64]) -> Tensor {
        Tensor::from_vec(rows, cols, v.to_vec()).unwrap()
    }

    #[test]
    fn sup_examples() {
        let onehot = t(2, 3, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        assert_eq!(loss_sup(&onehot, &[0, 2]).unwrap(), 0.0);
        let uniform = Tensor::filled(3, 4, 0.2);
        assert!((loss_sup(&uniform, &[0, 1, 3]).unwrap() - 4f64.ln()).abs() < 1e-10);
        let probs = t(2, 2, &[0.6, 0.2, 0.1, 0.3]);
        let a = loss_sup(&t(1, 2, &[0.6, 0.2]), &[0]).unwrap();
        let b = loss_sup(&t(1, 2, &[0.1, 0.3]), &[1]).unwrap();
        assert!((loss_sup(&probs, &[0, 1]).unwrap() - (a + b) / 2.0).abs() < 1e-12);
        assert!(loss_sup(&probs, &[0, 2]).is_err());
    }

    #[test]
    fn sup_zero_probability_is_clamped() {
        let v = loss_sup(&t(1, 2, &[1.0, 0.0]), &[1]).unwrap();
        assert!((v - (-LOG_FLOOR_LN)).abs() < 1e-9);
    }

    const LOG_FLOOR_LN: f64 = -27.631021115928547; // ln(1e-12)

    #[test]
    fn un_examples() {
        assert!(loss_un(&[0.0, 0.0], &[1.0, 1.0]).abs() < 1e-10);
        assert!((loss_un(&[0.5, 0.5], &[0.5]) - 2.0 * LN_2).abs() < 1e-10);
        assert!(loss_un(&[0.3], &[0.5]) > loss_un(&[0.2], &[0.5]));
    }

    #[test]
    fn ent_examples() {
        let onehot = t(2, 3, &[0.0, 0.9, 0.0, 0.0, 0.0, 0.5]);
        assert!(loss_ent(&onehot).abs() < 1e-10);
        assert!((loss_ent(&Tensor::filled(3, 2, 0.4)) - LN_2).abs() < 1e-10);
    }

    #[test]
    fn pt_examples() {
        assert!((loss_pt(&t(2, 3, &[1.0, 2.0, 3.0, 1.0, 2.0, 3.0])) - 1.0).abs() < 1e-10);
        assert_eq!(loss_pt(&t(2, 2, &[1.0, 0.0, 0.0, 2.0])), 0.0);
    }

    #[test]
    fn fm_examples() {
        let a = t(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(loss_fm(&a, &a, FmNorm::L2), 0.0);
        let b = t(2, 2, &[-2.0, -2.0, 0.0, 0.0]);
        assert!((loss_fm(&a, &b, FmNorm::L2) - 25.0).abs() < 1e-10);
        assert!((loss_fm(&a, &b, FmNorm::L1) - 7.0).abs() < 1e-10);
    }

    #[test]
    fn centered_generator_features() {
        let real = t(3, 2, &[1.0, 0.0, 0.0, 2.0, 2.0, 1.0]);
        let center = [1.0, 1.0];
        let gen = Tensor::from_rows(&[center.to_vec(), center.to_vec(), center.to_vec()]);
        let cfg = GameConfig::default();
        let g = generator_losses(&real, &gen, &cfg);
        assert!(g.fm.abs() < 1e-10);
        assert!((g.pt - 1.0).abs() < 1e-10);
        assert!((g.total - cfg.lambda2).abs() < 1e-10);
    }

    #[test]
    fn softmax_fake_splits() {
        let (p, f) = softmax_fake(&t(1, 2, &[LN_2, 0.0]));
        assert!((p.get(0, 0) - 0.5).abs() < 1e-15);
        assert!((p.get(0, 1) - 0.25).abs() < 1e-15);
        assert!((f[0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn predict_rules() {
        assert_eq!(predict(&t(1, 3, &[0.7, 0.1, 0.1])), vec![0]);
        assert_eq!(predict(&t(1, 2, &[0.45, 0.45])), vec![0]);
        let p = t(2, 3, &[0.1, 0.3, 0.2, 0.05, 0.02, 0.03]);
        let mut renorm = p.clone();
        for r in 0..2 {
            let s: f64 = p.row(r).iter().sum();
            renorm.row_mut(r).iter_mut().for_each(|v| *v /= s);
        }
        assert_eq!(predict(&p), predict(&renorm));
        assert_eq!(predict(&p), vec![1, 0]);
    }

    #[test]
    fn negative_weights_rejected() {
        let cfg = GameConfig {
            lambda1: -1.0,
            ..GameConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
