//! Finds a node the dual cannot certify and prints the perturbation built
//! from the dual solution.
//!
//! `cargo run --release --example attack_dump [Q]`

use gcn_robust::attack::{attack_summary, attack_tsv};
use gcn_robust::report::{certify_node, LabelSource};
use gcn_robust::synth::PlantedPartition;
use gcn_robust::train::{train, TrainConfig, TrainMode};
use gcn_robust::{Budget, CertifyMode, MessagePassing, Status};

fn main() -> gcn_robust::Result<()> {
    let global = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(6);
    let graph = PlantedPartition::default().generate()?;
    let mut config = TrainConfig::new(TrainMode::Ce, graph.num_features());
    config.log_margins = false;
    let params = train(&graph, &config)?.params;
    let mp = MessagePassing::gcn(&graph);
    let budget = Budget::new(Budget::default_local(graph.num_features()), global);
    for node in 0..graph.num_nodes() {
        let (sp, cert) = certify_node(&graph, &mp, &params, node, budget, CertifyMode::Default, LabelSource::Predicted)?;
        if cert.status == Status::NonRobust {
            println!("node {node}: prediction {} can be changed", cert.y_star);
            print!("{}", attack_tsv(&sp, &cert).expect("non-robust nodes carry an attack"));
            println!("{}", serde_json::to_string(&attack_summary(&cert))?);
            return Ok(());
        }
    }
    println!("every node is robust or undecided at Q = {global}");
    Ok(())
}
