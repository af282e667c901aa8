//! Finite-difference verification of the training-loss gradients.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::network;
use crate::error::Result;
use crate::gcn::GcnParams;
use crate::graph::{Graph, MessagePassing, SplitTag};
use crate::oracle::fixtures::tiny_instance;
use crate::train::{default_margin_labeled, default_margin_unlabeled, node_loss_on_tape, LossContext, NodeTerm, TrainMode};

/// Outcome of [`finite_difference_check`] for one loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdReport {
    pub mode: TrainMode,
    pub accepted: usize,
    pub rejected: usize,
    pub max_rel_error: f64,
}

/// A tiny labeled problem for one draw.
struct Draw {
    graph: Graph,
    params: GcnParams,
    budget: crate::bounds::Budget,
    terms: Vec<(usize, usize, NodeTerm)>,
}

fn draw(mode: TrainMode, seed: u64) -> Draw {
    let inst = tiny_instance(seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xfd);
    let n = inst.graph.num_nodes();
    let k = inst.graph.num_classes();
    let labels: Vec<Option<usize>> = (0..n).map(|_| Some(rng.gen_range(0..k))).collect();
    let split = (0..n)
        .map(|i| Some(if i == 0 { SplitTag::Labeled } else { SplitTag::Unlabeled }))
        .collect();
    let graph = inst.graph.with_labels(labels).unwrap().with_split(split).unwrap();
    let y0 = graph.label(0).unwrap();
    let m1 = default_margin_labeled();
    let mut terms = vec![(
        0,
        y0,
        match mode {
            TrainMode::Ce => NodeTerm::CrossEntropy,
            TrainMode::Rce => NodeTerm::RobustCrossEntropy,
            TrainMode::Rh | TrainMode::RhU => NodeTerm::HingeAndCrossEntropy(m1),
        },
    )];
    if mode == TrainMode::RhU && n > 1 {
        terms.push((1, 0, NodeTerm::PredictedHinge(default_margin_unlabeled())));
    }
    Draw {
        graph,
        params: inst.params,
        budget: inst.budget,
        terms,
    }
}

fn eval(d: &Draw, mp: &MessagePassing, params: &GcnParams) -> Result<network::Evaluation> {
    let ctx = LossContext {
        graph: &d.graph,
        mp,
        budget: d.budget,
        layer_count: params.layer_count(),
    };
    network::evaluate(params, |tape, net| {
        let mut parts = Vec::new();
        for &(node, label, term) in &d.terms {
            parts.push(node_loss_on_tape(tape, net, &ctx, node, label, term, None)?);
        }
        Ok(tape.add_all(&parts))
    })
}

/// Relative error `‖ad − fd‖∞ / max(‖fd‖∞, 1e-8)` of one draw, or `None`
/// when a perturbation by `±step` changes any discrete decision.
fn check_draw(d: &Draw, step: f64) -> Result<Option<f64>> {
    let mp = MessagePassing::gcn(&d.graph);
    let base = eval(d, &mp, &d.params)?;
    let ad = base.gradient.to_flat();
    let flat = d.params.to_flat();
    let mut fd = vec![0.0; flat.len()];
    for i in 0..flat.len() {
        let mut plus = flat.clone();
        plus[i] += step;
        let mut minus = flat.clone();
        minus[i] -= step;
        let ep = eval(d, &mp, &d.params.from_flat(&plus))?;
        let em = eval(d, &mp, &d.params.from_flat(&minus))?;
        if ep.signature != base.signature || em.signature != base.signature {
            return Ok(None);
        }
        fd[i] = (ep.value - em.value) / (2.0 * step);
    }
    let diff = ad.iter().zip(&fd).map(|(a, f)| (a - f).abs()).fold(0.0, f64::max);
    let scale = fd.iter().map(|f| f.abs()).fold(0.0, f64::max).max(1e-8);
    Ok(Some(diff / scale))
}

/// Compares reverse-mode gradients of `mode`'s loss with central
/// differences on `draws` accepted random draws, resampling draws that sit
/// near a kink.
pub fn finite_difference_check(mode: TrainMode, draws: usize, seed: u64, step: f64) -> Result<FdReport> {
    let mut report = FdReport {
        mode,
        accepted: 0,
        rejected: 0,
        max_rel_error: 0.0,
    };
    let mut s = seed;
    while report.accepted < draws {
        let d = draw(mode, s);
        s += 1;
        match check_draw(&d, step)? {
            Some(err) => {
                report.accepted += 1;
                report.max_rel_error = report.max_rel_error.max(err);
            }
            None => report.rejected += 1,
        }
        if report.rejected > 20 * draws.max(1) {
            break;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_check_passes_for_every_loss() {
        for mode in [TrainMode::Ce, TrainMode::Rce, TrainMode::Rh, TrainMode::RhU] {
            let r = finite_difference_check(mode, 3, 100, 1e-5).unwrap();
            assert_eq!(r.accepted, 3);
            assert!(r.max_rel_error <= 1e-4, "{r:?}");
        }
    }
}
