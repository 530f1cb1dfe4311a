//! File formats, dataset loaders, experiment configuration and the
//! `graphsgan` command-line tool, on top of [`graphsgan_core`].

pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod formats;
pub mod loader;
pub mod metrics;
pub mod pipeline;

pub use graphsgan_core as core;
