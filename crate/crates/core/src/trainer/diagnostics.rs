use alloc::vec::Vec;

use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::game::{record_outputs, softmax_fake};
use crate::nn::{Mode, Network, NnError, Tape};
use crate::rng::Rng64;
use crate::stats;
use crate::tensor::Tensor;

/// Rows per forward pass when scoring many nodes.
const CHUNK: usize = 1024;

fn with_predict_mode<T>(net: &mut Network, f: impl FnOnce(&mut Network) -> T) -> T {
    let mode = net.mode();
    net.set_mode(Mode::Predict);
    let out = f(net);
    net.set_mode(mode);
    out
}

/// Real-class probabilities and fake probability of every row, predict mode.
pub fn class_probabilities(classifier: &mut Network, x: &Tensor) -> Result<(Tensor, Vec<f64>), NnError> {
    with_predict_mode(classifier, |net| {
        let mut rng = Rng64::seed_from_u64(0);
        let mut probs = Vec::with_capacity(x.len());
        let mut p_fake = Vec::with_capacity(x.rows());
        let mut classes = 0;
        for start in (0..x.rows()).step_by(CHUNK) {
            let rows: Vec<usize> = (start..(start + CHUNK).min(x.rows())).collect();
            let (logits, _) = net.infer(&x.select_rows(&rows), &mut rng)?;
            let (p, f) = softmax_fake(&logits);
            classes = p.cols();
            probs.extend_from_slice(p.data());
            p_fake.extend(f);
        }
        Ok((Tensor::from_vec(x.rows(), classes, probs).expect("shape"), p_fake))
    })
}

/// Feature-layer outputs of every row, predict mode.
pub fn feature_embeddings(classifier: &mut Network, x: &Tensor) -> Result<Tensor, NnError> {
    with_predict_mode(classifier, |net| {
        let mut rng = Rng64::seed_from_u64(0);
        let mut data = Vec::new();
        let mut width = 0;
        for start in (0..x.rows()).step_by(CHUNK) {
            let rows: Vec<usize> = (start..(start + CHUNK).min(x.rows())).collect();
            let (_, h) = net.infer(&x.select_rows(&rows), &mut rng)?;
            width = h.cols();
            data.extend_from_slice(h.data());
        }
        Ok(Tensor::from_vec(x.rows(), width, data).expect("shape"))
    })
}

/// Per row, the L2 norm of the input gradient of the largest conditional
/// class probability, in predict mode.
pub fn input_gradient_norm(classifier: &mut Network, x: &Tensor) -> Result<Vec<f64>, NnError> {
    with_predict_mode(classifier, |net| {
        let mut rng = Rng64::seed_from_u64(0);
        let mut norms = Vec::with_capacity(x.rows());
        for start in (0..x.rows()).step_by(CHUNK) {
            let rows: Vec<usize> = (start..(start + CHUNK).min(x.rows())).collect();
            let mut tape = Tape::new();
            let binding = net.bind(&mut tape, false);
            let input = tape.variable(x.select_rows(&rows));
            let out = net.forward(&mut tape, &binding, input, &mut rng)?;
            let cond = record_outputs(&mut tape, out.output).conditional;
            let winners = crate::game::predict(tape.value(cond));
            let picked = tape.gather(cond, &winners);
            let total = tape.sum(picked);
            let grads = tape.backward(total)?;
            match grads.get(input) {
                Some(g) => norms.extend((0..g.rows()).map(|r| crate::math::sqrt(g.row(r).iter().map(|v| v * v).sum()))),
                None => norms.extend(core::iter::repeat(0.0).take(rows.len())),
            }
        }
        Ok(norms)
    })
}

/// One node observed at one training iteration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticRecord {
    pub step: usize,
    pub node: usize,
    pub grad_norm: f64,
    pub p_fake: f64,
}

/// Pearson correlation between gradient norm and fake probability across the
/// logged steps of each node, `None` where it is undefined.
pub fn node_correlations(records: &[DiagnosticRecord], nodes: usize) -> Vec<Option<f64>> {
    let mut g: Vec<Vec<f64>> = (0..nodes).map(|_| Vec::new()).collect();
    let mut p: Vec<Vec<f64>> = (0..nodes).map(|_| Vec::new()).collect();
    for r in records {
        g[r.node].push(r.grad_norm);
        p[r.node].push(r.p_fake);
    }
    g.iter().zip(&p).map(|(a, b)| stats::pearson_r(a, b).ok()).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSummary {
    pub marginal_median: Option<f64>,
    pub interior_median: Option<f64>,
    /// Nodes with a defined correlation in each group.
    pub marginal_count: usize,
    pub interior_count: usize,
}

pub fn summarize_correlations(per_node: &[Option<f64>], marginal: &[usize], interior: &[usize]) -> CorrelationSummary {
    let collect = |nodes: &[usize]| -> Vec<f64> { nodes.iter().filter_map(|&v| per_node[v]).collect() };
    let m = collect(marginal);
    let i = collect(interior);
    CorrelationSummary {
        marginal_median: stats::median(&m),
        interior_median: stats::median(&i),
        marginal_count: m.len(),
        interior_count: i.len(),
    }
}
