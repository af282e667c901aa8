//! Seeded generator of tiny certification instances.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bounds::Budget;
use crate::gcn::{self, GcnParams};
use crate::graph::{slice, Graph, MessagePassing, SlicedProblem};

/// A small graph, a three-layer model, a budget, and the target's slice.
#[derive(Debug, Clone)]
pub struct TinyInstance {
    pub seed: u64,
    pub graph: Graph,
    pub params: GcnParams,
    pub budget: Budget,
    pub sp: SlicedProblem,
    /// Predicted class of the target.
    pub y_star: usize,
}

/// At most 6 nodes, 5 attributes, 3 classes, 4 hidden units; `q ≤ 2`,
/// `Q ≤ 3`; the target is node 0.
pub fn tiny_instance(seed: u64) -> TinyInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=6);
    let d = rng.gen_range(1..=5);
    let k = rng.gen_range(2..=3);
    let hidden = rng.gen_range(1..=4);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(0.45) {
                edges.push((u, v));
            }
        }
    }
    if !edges.iter().any(|&(u, _)| u == 0) {
        edges.push((0, rng.gen_range(1..n)));
    }
    let ones: Vec<(usize, usize)> = (0..n)
        .flat_map(|u| (0..d).map(move |f| (u, f)))
        .filter(|_| rng.gen_bool(0.4))
        .collect();
    let graph = Graph::new(n, d, k, &edges, &ones).expect("generated graph is valid");
    let mut uniform = |rows: usize, cols: usize, scale: f64| {
        Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-scale..=scale))
    };
    let weights = vec![uniform(d, hidden, 1.0), uniform(hidden, k, 1.0)];
    let biases: Vec<Array1<f64>> = vec![
        uniform(1, hidden, 0.5).row(0).to_owned(),
        uniform(1, k, 0.5).row(0).to_owned(),
    ];
    let params = GcnParams::new(vec![d, hidden, k], weights, biases).expect("consistent shapes");
    let q = rng.gen_range(1..=d.min(2));
    let big_q = rng.gen_range(0..=3);
    let mp = MessagePassing::gcn(&graph);
    let sp = slice(&graph, &mp, 0, 3).expect("target exists");
    let y_star = gcn::forward_sliced(&sp, &params, None).expect("valid slice").predict();
    TinyInstance {
        seed,
        graph,
        params,
        budget: Budget::new(q, big_q),
        sp,
        y_star,
    }
}

/// `count` instances with seeds `base_seed, base_seed + 1, …`.
pub fn tiny_suite(count: usize, base_seed: u64) -> Vec<TinyInstance> {
    (0..count as u64).map(|i| tiny_instance(base_seed + i)).collect()
}
