//! Compares the first-layer bounds of a random tiny instance with the range
//! found by trying every admissible perturbation.
//!
//! `cargo run --example bounds_tightness [seed]`

use gcn_robust::bounds::compute_bounds;
use gcn_robust::oracle::enumerate_first_layer_extremes;
use gcn_robust::oracle::fixtures::tiny_instance;

fn main() -> gcn_robust::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(7);
    let inst = tiny_instance(seed);
    let bounds = compute_bounds(&inst.sp, &inst.params, inst.budget);
    let (lo, hi) = enumerate_first_layer_extremes(&inst.sp, &inst.params, inst.budget)?;
    let layer = bounds.layer(2);
    println!("budget q={} Q={}, {} x {} pre-activations", inst.budget.local, inst.budget.global, lo.nrows(), lo.ncols());
    for ((i, j), r) in layer.lower.indexed_iter() {
        println!(
            "H2[{i},{j}]  R {r:+.6}  min {:+.6}   S {:+.6}  max {:+.6}  {:?}",
            lo[[i, j]],
            layer.upper[[i, j]],
            hi[[i, j]],
            layer.tags[[i, j]]
        );
    }
    Ok(())
}
