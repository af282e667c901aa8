//! Dual-guided construction of an admissible worst-case perturbation.
//!
//! The flips are the selected entries `S_Q` of the dual solution whose
//! improvement `Δ` is strictly positive. The result is always feasible, so
//! evaluating it on the exact network gives an upper bound on the worst-case
//! margin; a negative value certifies non-robustness.

use std::fmt::Write as _;

use ndarray::Array2;
use serde::Serialize;

use crate::bounds::Budget;
use crate::dual::{Certificate, DualState};
use crate::error::Result;
use crate::gcn::{self, GcnParams};
use crate::graph::SlicedProblem;

/// Attribute flips applied to the sliced attribute block.
#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation {
    /// `(local input node, feature)` pairs, in selection order.
    pub flips: Vec<(usize, usize)>,
    pub perturbed_attrs: Array2<f64>,
}

impl Perturbation {
    pub fn empty(attrs: &Array2<f64>) -> Self {
        Perturbation {
            flips: Vec::new(),
            perturbed_attrs: attrs.clone(),
        }
    }

    pub fn from_flips(attrs: &Array2<f64>, flips: Vec<(usize, usize)>) -> Self {
        let mut perturbed_attrs = attrs.clone();
        for &(n, d) in &flips {
            perturbed_attrs[[n, d]] = 1.0 - attrs[[n, d]];
        }
        Perturbation { flips, perturbed_attrs }
    }

    pub fn is_empty(&self) -> bool {
        self.flips.is_empty()
    }

    /// Whether the flips respect the budget and the result is binary.
    pub fn is_admissible(&self, budget: Budget) -> bool {
        let mut per_node = std::collections::HashMap::new();
        for &(n, _) in &self.flips {
            *per_node.entry(n).or_insert(0usize) += 1;
        }
        let mut distinct = self.flips.clone();
        distinct.sort_unstable();
        distinct.dedup();
        distinct.len() == self.flips.len()
            && self.flips.len() <= budget.global
            && per_node.values().all(|&c| c <= budget.local)
            && self.perturbed_attrs.iter().all(|&v| v == 0.0 || v == 1.0)
    }

    /// Flips as `(global node id, feature)`.
    pub fn global_flips(&self, sp: &SlicedProblem) -> Vec<(usize, usize)> {
        self.flips
            .iter()
            .map(|&(n, d)| (sp.input_nodes()[n], d))
            .collect()
    }
}

/// `P = {(n, d) ∈ S_Q : Δ_nd > 0}` applied to `attrs`.
pub fn construct(state: &DualState, attrs: &Array2<f64>) -> Perturbation {
    let delta = state.delta();
    let flips = state
        .eta_rho
        .selected
        .iter()
        .copied()
        .filter(|&(n, d)| delta[[n, d]] > 0.0)
        .collect();
    Perturbation::from_flips(attrs, flips)
}

/// Exact margin `f(X̃)_{y*} − f(X̃)_y` of the constructed perturbation.
pub fn construct_and_evaluate(
    sp: &SlicedProblem,
    params: &GcnParams,
    state: &DualState,
    y_star: usize,
    y: usize,
) -> Result<f64> {
    let pert = construct(state, &sp.sliced_attrs);
    let trace = gcn::forward_sliced(sp, params, Some(&pert.perturbed_attrs))?;
    Ok(trace.logits[y_star] - trace.logits[y])
}

/// Attack dump rows `node_global_id \t feature \t old \t new` for the most
/// damaging class of a certificate, or `None` when nothing flips.
pub fn attack_tsv(sp: &SlicedProblem, cert: &Certificate) -> Option<String> {
    let worst = *cert.flipping_classes().first()?;
    let pert = &cert.attacks[worst];
    let mut out = String::new();
    for (&(n, d), (gn, _)) in pert.flips.iter().zip(pert.global_flips(sp)) {
        let old = sp.sliced_attrs[[n, d]] as u8;
        let _ = writeln!(out, "{gn}\t{d}\t{old}\t{}", 1 - old);
    }
    Some(out)
}

#[derive(Debug, Serialize)]
pub struct AttackSummary {
    pub node: usize,
    pub y_star: usize,
    pub status: crate::dual::Status,
    /// Flipping classes, most negative margin first.
    pub flipped_to: Vec<usize>,
    pub primal_margin: Vec<f64>,
    pub dual_lower: Vec<f64>,
    pub num_flips: usize,
}

pub fn attack_summary(cert: &Certificate) -> AttackSummary {
    let flipped_to = cert.flipping_classes();
    let num_flips = flipped_to
        .first()
        .map(|&k| cert.attacks[k].flips.len())
        .unwrap_or(0);
    AttackSummary {
        node: cert.node,
        y_star: cert.y_star,
        status: cert.status,
        flipped_to,
        primal_margin: cert.primal_margins.clone(),
        dual_lower: cert.dual_lower.clone(),
        num_flips,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dual::{closed_form_eta_rho, Backward, Omega};
    use ndarray::arr2;

    fn state_with_delta(delta: Array2<f64>, budget: Budget) -> DualState {
        let eta_rho = closed_form_eta_rho(&delta, budget);
        DualState {
            omega: Omega { layers: vec![] },
            psi: Array2::zeros(delta.dim()),
            backward: Backward {
                phi: vec![],
                phi_hat: vec![],
                delta,
            },
            eta_rho,
            value: 0.0,
        }
    }

    #[test]
    fn zero_delta_means_no_flips() {
        let attrs = arr2(&[[1.0, 0.0], [0.0, 0.0]]);
        let st = state_with_delta(Array2::zeros((2, 2)), Budget::new(1, 2));
        let p = construct(&st, &attrs);
        assert!(p.is_empty());
        assert_eq!(p.perturbed_attrs, attrs);
    }

    #[test]
    fn hand_example_flips_first_entry() {
        let attrs = arr2(&[[0.0, 1.0], [1.0, 0.0]]);
        let st = state_with_delta(arr2(&[[3.0, 1.0], [2.0, 0.0]]), Budget::new(1, 1));
        let p = construct(&st, &attrs);
        assert_eq!(p.flips, vec![(0, 0)]);
        assert_eq!(p.perturbed_attrs, arr2(&[[1.0, 1.0], [1.0, 0.0]]));
        assert!(p.is_admissible(Budget::new(1, 1)));
    }

    #[test]
    fn empty_global_budget_means_no_flips() {
        let attrs = arr2(&[[0.0, 1.0]]);
        let st = state_with_delta(arr2(&[[3.0, 1.0]]), Budget::new(1, 0));
        assert!(construct(&st, &attrs).is_empty());
    }

    #[test]
    fn admissibility_checks() {
        let attrs = arr2(&[[0.0, 1.0, 0.0]]);
        let p = Perturbation::from_flips(&attrs, vec![(0, 0), (0, 2)]);
        assert!(p.is_admissible(Budget::new(2, 2)));
        assert!(!p.is_admissible(Budget::new(1, 2)));
        assert!(!p.is_admissible(Budget::new(2, 1)));
    }
}
