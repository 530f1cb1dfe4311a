//! Core algorithms for semi-supervised node classification with a
//! generator/classifier game on graphs.
//!
//! The crate is `no_std` (it only needs `alloc`) and contains no IO. It covers:
//!
//! - [`graph`]: undirected graphs, normalized edge weights, marginal/interior
//!   analysis, partial graphs, kNN graphs and fake-node degree augmentation.
//! - [`nn`]: a small tape-based reverse-mode differentiation engine plus the
//!   layers the classifier and generator need (weight-normalized dense layers,
//!   batch normalization, Gaussian noise, ELU, tanh, softmax with an implicit
//!   fake logit), Adam and Xavier initialization.
//! - [`embedding`]: random-walk skip-gram node embeddings.
//! - [`game`]: the five loss terms and the two composite objectives.
//! - [`trainer`]: preprocessing, batch sampling, the alternating training loop
//!   and the smoothness diagnostics.
//! - [`lab`]: the Laplacian-regularization objective, an exhaustive minimizer,
//!   label propagation, the degree threshold `d0`, and the adversarial label
//!   propagation pipeline.
//! - [`dataset`]: the in-memory dataset type, split construction and the
//!   planted-partition generator.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod dataset;
pub mod embedding;
pub mod game;
pub mod graph;
pub mod lab;
pub mod math;
pub mod nn;
pub mod rng;
pub mod stats;
pub mod tensor;
pub mod trainer;

pub use graph::{Graph, GraphError, Labeling, NodePartition};
pub use nn::{Mode, Network, Tape, Var};
pub use tensor::Tensor;
