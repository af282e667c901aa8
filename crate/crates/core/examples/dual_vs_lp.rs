//! Walks the chain dual(default) <= dual(optimized) <= LP <= exact <= primal
//! on a few tiny instances.
//!
//! `cargo run --release --example dual_vs_lp [count]`

use gcn_robust::dual::PgaConfig;
use gcn_robust::oracle::fixtures::tiny_suite;
use gcn_robust::oracle::sandwich;

fn main() -> gcn_robust::Result<()> {
    let count = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(10);
    println!("seed class  g(default)  g(optimized)        LP       exact     primal");
    for inst in tiny_suite(count, 0) {
        for s in sandwich(&inst.sp, &inst.params, inst.budget, PgaConfig::default())? {
            println!(
                "{:4} {:5} {:11.6} {:13.6} {:9.6} {:11.6} {:10.6}",
                inst.seed, s.class, s.dual_default, s.dual_optimized, s.lp, s.exact, s.primal_optimized
            );
        }
    }
    Ok(())
}
