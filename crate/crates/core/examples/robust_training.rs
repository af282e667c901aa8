//! Trains a CE and an RH-U model on the same planted-partition graph and
//! compares how many nodes each can certify at the training budget.
//!
//! `cargo run --release --example robust_training [seed]`

use std::time::Instant;

use gcn_robust::bounds::Budget;
use gcn_robust::gcn::forward_full;
use gcn_robust::report::{certify_nodes, LabelSource, StatusCounts};
use gcn_robust::synth::PlantedPartition;
use gcn_robust::train::{accuracy, train, TrainConfig, TrainMode};
use gcn_robust::{CertifyMode, MessagePassing, SplitTag};

fn main() -> gcn_robust::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let graph = PlantedPartition { seed, ..Default::default() }.generate()?;
    let mp = MessagePassing::gcn(&graph);
    let budget = Budget::new(Budget::default_local(graph.num_features()), 4);
    let all: Vec<usize> = (0..graph.num_nodes()).collect();
    let unlabeled = graph.nodes_with_split(SplitTag::Unlabeled);

    for mode in [TrainMode::Ce, TrainMode::RhU] {
        let start = Instant::now();
        let mut config = TrainConfig::new(mode, graph.num_features());
        config.budget = budget;
        config.seed = seed;
        config.log_margins = false;
        let result = train(&graph, &config)?;
        let logits = forward_full(&graph, &mp, &result.params)?;
        let certs = certify_nodes(&graph, &mp, &result.params, &all, budget, CertifyMode::Default, LabelSource::Predicted)?;
        let (robust, nonrobust, undecided) = StatusCounts::of(&certs).fractions();
        println!(
            "{:5} epochs {:4}  unlabeled acc {:.3}  robust {:.3}  non-robust {:.3}  undecided {:.3}  ({:.1}s)",
            mode.as_str(),
            result.log.len(),
            accuracy(&graph, &logits, &unlabeled),
            robust,
            nonrobust,
            undecided,
            start.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
