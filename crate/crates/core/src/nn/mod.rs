//! Minimal neural-network toolkit: tape autodiff, layers, Adam, Xavier init.

mod adam;
pub mod check;
mod init;
mod network;
mod tape;

pub use adam::{AdamConfig, AdamState};
pub use init::xavier_uniform;
pub use network::{
    Binding, ClassifierSpec, Forward, GeneratorSpec, Layer, Mode, Network, BN_EPS, BN_MOMENTUM,
};
pub use tape::{Gradients, Tape, Var, LOG_FLOOR, PULL_AWAY_EPS};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NnError {
    #[error("node {0} was never recorded on this tape")]
    NotRecorded(usize),
    #[error("backward needs a scalar loss, got a {0}x{1} tensor")]
    NonScalarLoss(usize, usize),
    #[error("batch normalization in train mode needs at least 2 rows, got {0}")]
    BatchTooSmall(usize),
    #[error("noise standard deviation must be >= 0, got {0}")]
    NegativeSigma(f64),
    #[error("layer {layer}: direction row {row} is zero")]
    ZeroDirection { layer: usize, row: usize },
    #[error("input has {actual} columns, network expects {expected}")]
    InputWidth { expected: usize, actual: usize },
    #[error("feature layer index {0} is out of range")]
    FeatureLayer(usize),
    #[error("parameter count mismatch: expected {expected}, got {actual}")]
    ParamCount { expected: usize, actual: usize },
    #[error("parameter {index} has shape {actual:?}, expected {expected:?}")]
    ParamShape {
        index: usize,
        expected: (usize, usize),
        actual: (usize, usize),
    },
}
