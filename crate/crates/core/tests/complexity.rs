//! Operation counts of the all-nodes first-layer bounds.

use gcn_robust::bounds::{compute_bounds, full_graph_first_layer_bounds, Budget};
use gcn_robust::gcn::GcnParams;
use gcn_robust::graph::slice;
use gcn_robust::synth::PlantedPartition;
use gcn_robust::MessagePassing;

fn family(nodes: usize) -> (gcn_robust::Graph, MessagePassing) {
    // Constant expected degree: p scales like 1/N.
    let graph = PlantedPartition {
        nodes,
        features: 30,
        p_in: 8.0 / nodes as f64,
        p_out: 1.0 / nodes as f64,
        seed: nodes as u64,
        ..Default::default()
    }
    .generate()
    .unwrap();
    let mp = MessagePassing::gcn(&graph);
    (graph, mp)
}

#[test]
fn operation_count_is_linear_in_nodes_and_edges() {
    let hidden = 8;
    let budget = Budget::new(2, 12);
    let mut per_unit = Vec::new();
    for nodes in [100, 200, 400, 800] {
        let (graph, mp) = family(nodes);
        let params = GcnParams::glorot(vec![30, hidden, 2], 1);
        let b = full_graph_first_layer_bounds(&graph, &mp, &params, budget);
        let nnz = mp.matrix().nnz() as u64;
        assert_eq!(nnz, 2 * graph.num_edges() as u64 + nodes as u64);
        let expected = hidden as u64 * (nodes as u64 * 30 + nnz * 2);
        assert_eq!(b.operations, expected);
        per_unit.push(b.operations as f64 / (nodes + graph.num_edges()) as f64);
    }
    let (lo, hi) = per_unit.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &v| (l.min(v), h.max(v)));
    assert!(hi / lo < 1.25, "operations per node+edge drift: {per_unit:?}");
}

#[test]
fn full_graph_bounds_match_sliced_bounds() {
    let (graph, mp) = family(60);
    let params = GcnParams::glorot(vec![30, 5, 2], 2);
    let budget = Budget::new(2, 5);
    let full = full_graph_first_layer_bounds(&graph, &mp, &params, budget);
    for t in 0..graph.num_nodes() {
        let sp = slice(&graph, &mp, t, 3).unwrap();
        let layer = &compute_bounds(&sp, &params, budget).layers[0];
        for (row, &node) in sp.layer_nodes(2).iter().enumerate() {
            for j in 0..5 {
                assert!((layer.lower[[row, j]] - full.lower[[node, j]]).abs() < 1e-12);
                assert!((layer.upper[[row, j]] - full.upper[[node, j]]).abs() < 1e-12);
            }
        }
    }
}
