//! Finite-difference check of every training loss on random tiny draws.
//!
//! `cargo run --release --example gradient_check [draws]`

use gcn_robust::grad::check::finite_difference_check;
use gcn_robust::train::TrainMode;

fn main() -> gcn_robust::Result<()> {
    let draws = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    for mode in [TrainMode::Ce, TrainMode::Rce, TrainMode::Rh, TrainMode::RhU] {
        let r = finite_difference_check(mode, draws, 0, 1e-5)?;
        println!(
            "{:5} {} draws ({} rejected near kinks), max relative error {:.2e}",
            mode.as_str(),
            r.accepted,
            r.rejected,
            r.max_rel_error
        );
    }
    Ok(())
}
