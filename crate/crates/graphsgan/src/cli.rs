//! Command-line front end. Exit status 2 means a usage or configuration
//! error, 1 a failure while running.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};

use crate::checkpoint::Checkpoint;
use crate::config::ExperimentConfig;
use crate::formats;
use crate::loader::write_dataset_dir;
use crate::pipeline::{self, EMBEDDING_FILE};

#[derive(Debug, Parser)]
#[command(name = "graphsgan", version, about = "Semi-supervised node classification with a generated-sample game")]
pub struct Cli {
    /// TOML experiment config; defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the config's master seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides GRAPHSGAN_OUTPUT_DIR and the config's output_dir.
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train the structural embedding and write it as a dense matrix.
    Embed,
    /// Train classifier and generator; write metrics, predictions and a checkpoint.
    Train(EmbeddingArg),
    /// Score a checkpoint on the configured dataset.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[command(flatten)]
        embedding: EmbeddingArg,
    },
    /// Check exact minimizers on random graphs after degree augmentation.
    VerifyTheorem {
        /// Number of random instances.
        #[arg(long)]
        random: usize,
        /// Largest instance size.
        #[arg(long)]
        max_nodes: Option<usize>,
    },
    /// Label propagation on a kNN graph with high-p_fake nodes boosted.
    #[command(group = clap::ArgGroup::new("scores").required(true))]
    AdvLp {
        /// CSV `node,p_fake`.
        #[arg(long, group = "scores")]
        p_fake: Option<PathBuf>,
        /// Take p_fake from this checkpoint's classifier.
        #[arg(long, group = "scores")]
        checkpoint: Option<PathBuf>,
        /// Boost threshold on p_fake; overrides lab.adversarial.tau.
        #[arg(long)]
        tau: Option<f64>,
        /// Degree boosted nodes are raised to; overrides lab.adversarial.r.
        #[arg(long)]
        r: Option<usize>,
        /// Neighbors per node in the kNN graph; overrides lab.adversarial.k.
        #[arg(long)]
        k: Option<usize>,
        #[command(flatten)]
        embedding: EmbeddingArg,
    },
    /// Write the configured dataset (by default a planted partition) as a dataset directory.
    GenSynthetic {
        /// Target directory; defaults to `<output-dir>/synthetic`.
        #[arg(long)]
        dir: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct EmbeddingArg {
    /// Reuse a dense embedding matrix instead of training one.
    #[arg(long)]
    pub embedding: Option<PathBuf>,
}

enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p).map_err(|e| Failure::Usage(e.into()))?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.set_seed(seed);
    }
    Ok(cfg)
}

fn create_dir(dir: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut cfg = load_config(&cli)?;
    let out = cfg.resolve_output_dir(cli.output_dir.as_deref());
    match cli.command {
        Command::Embed => {
            let data = pipeline::load_dataset(&cfg)?;
            cfg.use_embedding = true;
            let q = pipeline::embedding_for(&cfg, &data, None)?.expect("enabled");
            create_dir(&out)?;
            formats::write_dense_matrix(&out.join(EMBEDDING_FILE), &q).map_err(anyhow::Error::from)?;
            println!("{}", out.join(EMBEDDING_FILE).display());
        }
        Command::Train(emb) => {
            let data = pipeline::load_dataset(&cfg)?;
            let q = pipeline::embedding_for(&cfg, &data, emb.embedding.as_deref())?;
            let run = pipeline::train_run(&cfg, &data, q.as_ref())?;
            pipeline::write_train_outputs(&out, &data, &run)?;
            println!("{}", serde_json::to_string_pretty(&run.summary).map_err(anyhow::Error::from)?);
        }
        Command::Eval { checkpoint, embedding } => {
            let mut ckpt = Checkpoint::load(&checkpoint).map_err(anyhow::Error::from)?;
            let data = pipeline::load_dataset(&cfg)?;
            let q = pipeline::embedding_for(&cfg, &data, embedding.embedding.as_deref())?;
            let prepared = pipeline::prepare_inputs(&cfg, &data, q.as_ref())?;
            if prepared.input_dim() != ckpt.input_dim {
                return Err(Failure::Runtime(anyhow!(
                    "checkpoint expects {} input columns, the configured dataset gives {}",
                    ckpt.input_dim,
                    prepared.input_dim()
                )));
            }
            let (report, _, _) = pipeline::evaluate(&data.name, &mut ckpt, &prepared, cfg.train.eval_samples, cfg.seed)?;
            create_dir(&out)?;
            pipeline::write_json(&out.join("eval.json"), &report)?;
            println!("{}", serde_json::to_string_pretty(&report).map_err(anyhow::Error::from)?);
        }
        Command::VerifyTheorem { random, max_nodes } => {
            if let Some(k) = max_nodes {
                cfg.lab.instance.max_nodes = k;
            }
            cfg.validate().map_err(|e| Failure::Usage(e.into()))?;
            let batch = pipeline::verify_random_theorems(random, &cfg.lab, cfg.seed)?;
            create_dir(&out)?;
            pipeline::write_json(&out.join("theorem.json"), &batch)?;
            println!("{}/{} instances recovered the ground truth", batch.matched, batch.instances);
            if batch.matched != batch.instances {
                return Err(Failure::Runtime(anyhow!("{} instance(s) did not match", batch.instances - batch.matched)));
            }
        }
        Command::AdvLp {
            p_fake,
            checkpoint,
            tau,
            r,
            k,
            embedding,
        } => {
            let adv = &mut cfg.lab.adversarial;
            adv.tau = tau.unwrap_or(adv.tau);
            adv.r = r.unwrap_or(adv.r);
            adv.k = k.unwrap_or(adv.k);
            cfg.validate().map_err(|e| Failure::Usage(e.into()))?;
            let data = pipeline::load_dataset(&cfg)?;
            let q = pipeline::embedding_for(&cfg, &data, embedding.embedding.as_deref())?;
            let prepared = pipeline::prepare_inputs(&cfg, &data, q.as_ref())?;
            let scores = match (p_fake, checkpoint) {
                (Some(p), _) => formats::read_p_fake(&p, data.node_count()).map_err(anyhow::Error::from)?,
                (None, Some(c)) => {
                    let mut ckpt = Checkpoint::load(&c).map_err(anyhow::Error::from)?;
                    pipeline::evaluate(&data.name, &mut ckpt, &prepared, cfg.train.eval_samples, cfg.seed)?.2
                }
                (None, None) => unreachable!("clap requires one score source"),
            };
            let report = pipeline::adversarial_report(&prepared, &scores, &cfg.lab.adversarial)?;
            create_dir(&out)?;
            pipeline::write_json(&out.join("adv_lp.json"), &report)?;
            println!("{}", serde_json::to_string_pretty(&report).map_err(anyhow::Error::from)?);
        }
        Command::GenSynthetic { dir } => {
            let data = pipeline::load_dataset(&cfg)?;
            let dir = dir.unwrap_or_else(|| out.join("synthetic"));
            write_dataset_dir(&dir, &data).map_err(anyhow::Error::from)?;
            println!("{}", dir.display());
        }
    }
    Ok(())
}

/// Parses arguments, runs, and maps the outcome to an exit status.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            report(&e);
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            report(&e);
            ExitCode::from(1)
        }
    }
}

/// Prints the error chain, skipping causes already spelled out by the
/// message above them.
fn report(e: &anyhow::Error) {
    let mut shown = String::new();
    for cause in e.chain() {
        let msg = cause.to_string();
        if !shown.contains(&msg) {
            if !shown.is_empty() {
                shown.push_str(": ");
            }
            shown.push_str(&msg);
        }
    }
    eprintln!("error: {shown}");
}
