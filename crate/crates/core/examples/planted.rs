//! Trains on a small planted-partition graph and compares the classifier
//! against plain label propagation on the unlabeled nodes.
//!
//! `cargo run --release -p graphsgan-core --example planted [seed]`

use graphsgan_core::dataset::{planted_partition, PlantedPartitionConfig};
use graphsgan_core::embedding::{embed_graph, EmbeddingConfig};
use graphsgan_core::game::GameConfig;
use graphsgan_core::lab::{label_propagation, seeds_from_labeling, RegularizationProblem};
use graphsgan_core::trainer::{prepare, train, TrainConfig};

fn main() {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let data = planted_partition(&PlantedPartitionConfig::default(), seed).expect("generator config is valid");

    let problem = RegularizationProblem::new(data.graph.clone(), seeds_from_labeling(&data.labeling()), 1.0, data.class_count)
        .expect("labeling matches graph");
    let lp = label_propagation(&problem, 1000);
    let unlabeled = data.split.unlabeled_nodes();
    let lp_hits = unlabeled.iter().filter(|&&v| lp.labeling.label(v) == data.labels[v]).count();

    let embedding = embed_graph(&data.graph, &EmbeddingConfig { seed, ..Default::default() }).expect("graph has edges");
    let prepared = prepare(&data, Some(&embedding.vectors), 0.7).expect("embedding matches graph");
    let train_cfg = TrainConfig { seed, max_epochs: 5, ..Default::default() };
    let outcome = train(&prepared, &train_cfg, &GameConfig::default()).expect("defaults are valid");

    for h in &outcome.history {
        println!(
            "epoch {:>2}  sup {:.3}  un {:.3}  unlabeled acc {:.4}  p_fake real {:.3} generated {:.3}",
            h.epoch, h.losses.sup, h.losses.un, h.unlabeled_accuracy, h.mean_p_fake_real, h.mean_p_fake_generated
        );
    }
    println!("label propagation: {:.4}", lp_hits as f64 / unlabeled.len() as f64);
}
