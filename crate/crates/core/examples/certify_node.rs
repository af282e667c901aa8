//! Certifies one node of a planted-partition graph with the default and the
//! optimized envelope slopes.
//!
//! `cargo run --release --example certify_node [node] [Q]`

use gcn_robust::report::{certify_node, LabelSource};
use gcn_robust::synth::PlantedPartition;
use gcn_robust::train::{train, TrainConfig, TrainMode};
use gcn_robust::{Budget, CertifyMode, MessagePassing};

fn main() -> gcn_robust::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<usize>().expect("numeric argument"));
    let node = args.next().unwrap_or(0);
    let global = args.next().unwrap_or(4);

    let graph = PlantedPartition::default().generate()?;
    let mut config = TrainConfig::new(TrainMode::Ce, graph.num_features());
    config.log_margins = false;
    let params = train(&graph, &config)?.params;
    let mp = MessagePassing::gcn(&graph);
    let budget = Budget::new(Budget::default_local(graph.num_features()), global);

    for (name, mode) in [("default", CertifyMode::Default), ("optimized", CertifyMode::optimized())] {
        let (_, cert) = certify_node(&graph, &mp, &params, node, budget, mode, LabelSource::Predicted)?;
        println!("{name:9} {}", cert.to_json_line());
    }
    Ok(())
}
