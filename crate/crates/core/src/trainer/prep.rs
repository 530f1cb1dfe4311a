use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::TrainError;
use crate::dataset::{Dataset, Split};
use crate::graph::{Graph, Labeling};
use crate::tensor::Tensor;

/// Blends each row with the mean of its neighbors' rows:
/// `alpha * w_i + (1 - alpha) * mean_j w_j`. Isolated nodes keep their row.
pub fn neighbor_fusion(features: &Tensor, g: &Graph, alpha: f64) -> Result<Tensor, TrainError> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(TrainError::Config("fusion alpha must lie in [0, 1]"));
    }
    if features.rows() != g.node_count() {
        return Err(TrainError::Shape {
            what: "feature rows",
            expected: g.node_count(),
            actual: features.rows(),
        });
    }
    let mut out = features.clone();
    let mut mean = vec![0.0; features.cols()];
    for v in 0..g.node_count() {
        let nb = g.neighbors(v);
        if nb.is_empty() {
            continue;
        }
        mean.iter_mut().for_each(|m| *m = 0.0);
        for &w in nb {
            for (m, x) in mean.iter_mut().zip(features.row(w)) {
                *m += x;
            }
        }
        let share = (1.0 - alpha) / nb.len() as f64;
        for ((o, &x), &m) in out.row_mut(v).iter_mut().zip(features.row(v)).zip(&mean) {
            *o = alpha * x + share * m;
        }
    }
    Ok(out)
}

/// Per-column affine map onto `[-1, 1]`; constant columns map to 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitScaling {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl UnitScaling {
    pub fn fit(x: &Tensor) -> Self {
        let mut min = vec![f64::INFINITY; x.cols()];
        let mut max = vec![f64::NEG_INFINITY; x.cols()];
        for r in 0..x.rows() {
            for (c, &v) in x.row(r).iter().enumerate() {
                min[c] = min[c].min(v);
                max[c] = max[c].max(v);
            }
        }
        UnitScaling { min, max }
    }

    pub fn apply(&self, x: &Tensor) -> Tensor {
        let mut out = x.clone();
        for r in 0..x.rows() {
            for (c, v) in out.row_mut(r).iter_mut().enumerate() {
                let span = self.max[c] - self.min[c];
                *v = if span > 0.0 { 2.0 * (*v - self.min[c]) / span - 1.0 } else { 0.0 };
            }
        }
        out
    }

    /// Inverse of [`UnitScaling::apply`]; constant columns come back as their
    /// constant.
    pub fn invert(&self, x: &Tensor) -> Tensor {
        let mut out = x.clone();
        for r in 0..x.rows() {
            for (c, v) in out.row_mut(r).iter_mut().enumerate() {
                let span = self.max[c] - self.min[c];
                *v = self.min[c] + (*v + 1.0) * span / 2.0;
            }
        }
        out
    }
}

pub fn scale_to_unit(x: &Tensor) -> (Tensor, UnitScaling) {
    let scaling = UnitScaling::fit(x);
    (scaling.apply(x), scaling)
}

/// Classifier inputs for every node plus the labels and split they are
/// trained and evaluated with.
#[derive(Clone, Debug, PartialEq)]
pub struct PreparedDataset {
    /// Fused features joined with the embedding, scaled to `[-1, 1]`.
    pub inputs: Tensor,
    pub labels: Vec<usize>,
    pub class_count: usize,
    pub split: Split,
    pub graph: Graph,
    pub scaling: UnitScaling,
}

impl PreparedDataset {
    pub fn input_dim(&self) -> usize {
        self.inputs.cols()
    }

    pub fn labeling(&self) -> Labeling {
        Labeling::with_mask(self.labels.clone(), self.class_count, self.split.train.clone()).expect("validated labels")
    }
}

/// Fuses the dataset's features over its graph, appends `embedding` when
/// given, and scales every column to `[-1, 1]`.
pub fn prepare(dataset: &Dataset, embedding: Option<&Tensor>, alpha: f64) -> Result<PreparedDataset, TrainError> {
    let fused = neighbor_fusion(&dataset.features, &dataset.graph, alpha)?;
    let joined = match embedding {
        Some(q) if q.rows() != fused.rows() => {
            return Err(TrainError::Shape {
                what: "embedding rows",
                expected: fused.rows(),
                actual: q.rows(),
            })
        }
        Some(q) => fused.hconcat(q),
        None => fused,
    };
    let (inputs, scaling) = scale_to_unit(&joined);
    Ok(PreparedDataset {
        inputs,
        labels: dataset.labels.clone(),
        class_count: dataset.class_count,
        split: dataset.split.clone(),
        graph: dataset.graph.clone(),
        scaling,
    })
}
