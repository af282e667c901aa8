//! Certification curve of a CE-trained model as CSV on stdout.
//!
//! `cargo run --release --example certification_curve [Q_max]`

use gcn_robust::report::{certification_curve, curve_csv, LabelSource};
use gcn_robust::synth::PlantedPartition;
use gcn_robust::train::{train, TrainConfig, TrainMode};
use gcn_robust::{Budget, CertifyMode, MessagePassing};

fn main() -> gcn_robust::Result<()> {
    let q_max = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(8);
    let graph = PlantedPartition::default().generate()?;
    let mut config = TrainConfig::new(TrainMode::Ce, graph.num_features());
    config.log_margins = false;
    let params = train(&graph, &config)?.params;
    let mp = MessagePassing::gcn(&graph);
    let local = Budget::default_local(graph.num_features());
    let rows = certification_curve(&graph, &mp, &params, local, q_max, CertifyMode::Default, LabelSource::Predicted)?;
    print!("{}", curve_csv(&rows));
    Ok(())
}
