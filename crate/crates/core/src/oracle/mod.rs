//! Independent checks of the certificates on small instances: exhaustive
//! enumeration, explicit LPs solved by a dense simplex, and the optimality
//! conditions of the closed-form budget multipliers.

pub mod enumerate;
pub mod fixtures;
pub mod lp;
pub mod relaxation;

use ndarray::{Array1, Array2};
use serde::Serialize;

pub use enumerate::{enumerate_exact_margin, enumerate_first_layer_extremes, perturbation_count, EnumerationResult};
pub use lp::{solve_lp, LpModel, LpSolution, Sense};
pub use relaxation::{build_inner_lp, build_primal_lp};

use crate::attack;
use crate::bounds::{compute_bounds, ActivationBounds, Budget};
use crate::dual::{self, class_difference, default_omega, dual_state, PgaConfig};
use crate::error::Result;
use crate::gcn::{self, GcnParams};
use crate::graph::SlicedProblem;

/// Relaxed LP optimum against the minimum over binary attribute matrices of
/// the LP with attributes pinned.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegralityReport {
    pub relaxed: f64,
    pub binary_min: f64,
}

impl IntegralityReport {
    pub fn holds(&self, tol: f64) -> bool {
        (self.relaxed - self.binary_min).abs() <= tol
    }
}

pub fn check_integrality(
    sp: &SlicedProblem,
    params: &GcnParams,
    bounds: &ActivationBounds,
    c: &Array1<f64>,
) -> Result<IntegralityReport> {
    let relaxed = solve_lp(&build_primal_lp(sp, params, bounds, bounds.budget, c))?.value;
    let mut binary_min = f64::INFINITY;
    let mut failure = None;
    enumerate::for_each_perturbation(&sp.sliced_attrs, bounds.budget, |xt| {
        match solve_lp(&build_inner_lp(sp, params, bounds, c, xt)) {
            Ok(s) => binary_min = binary_min.min(s.value),
            Err(e) => failure = Some(e),
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(IntegralityReport { relaxed, binary_min })
}

/// Values compared by [`check_eta_rho_optimality`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EtaRhoReport {
    /// `Σ Δ` over the greedy selection.
    pub greedy: f64,
    /// Optimum of `max ΣΔα` s.t. `0 ≤ α ≤ 1`, row sums `≤ q`, total `≤ Q`.
    pub lp_optimum: f64,
    /// `‖Ψ‖₁ + q Σ η + Q ρ` at the closed-form multipliers.
    pub closed_form: f64,
    /// Minimum of the same function over the breakpoint grid of `(η, ρ)`.
    pub grid_min: f64,
}

impl EtaRhoReport {
    pub fn holds(&self, tol: f64) -> bool {
        let v = [self.greedy, self.lp_optimum, self.closed_form, self.grid_min];
        v.iter().all(|x| (x - self.closed_form).abs() <= tol)
    }
}

fn budget_penalty(delta: &Array2<f64>, eta: &[f64], rho: f64, local: usize, global: usize) -> f64 {
    dual::psi(delta, eta, rho).sum() + local as f64 * eta.iter().sum::<f64>() + global as f64 * rho
}

/// Exact minimum of the budget penalty over `η, ρ ≥ 0`: the function is
/// piecewise linear with kinks where `ρ` or `ρ + η_n` meets an entry of `Δ`.
fn grid_min(delta: &Array2<f64>, local: usize, global: usize) -> f64 {
    let mut rhos: Vec<f64> = delta.iter().copied().chain(std::iter::once(0.0)).filter(|&v| v >= 0.0).collect();
    rhos.sort_by(f64::total_cmp);
    rhos.dedup();
    let mut best = f64::INFINITY;
    for &rho in &rhos {
        let mut total = global as f64 * rho;
        for row in delta.rows() {
            let mut row_best = f64::INFINITY;
            for eta in row.iter().map(|&v| v - rho).chain(std::iter::once(0.0)).filter(|&e| e >= 0.0) {
                let v: f64 = row.iter().map(|&x| (x - rho - eta).max(0.0)).sum::<f64>() + local as f64 * eta;
                row_best = row_best.min(v);
            }
            total += row_best;
        }
        best = best.min(total);
    }
    best
}

/// Checks the closed-form `(η, ρ)` against the `α` LP and the breakpoint grid.
pub fn check_eta_rho_optimality(delta: &Array2<f64>, budget: Budget) -> Result<EtaRhoReport> {
    let er = dual::closed_form_eta_rho(delta, budget);
    let greedy = er.selected.iter().map(|&(n, d)| delta[[n, d]]).sum();
    let (rows, dim) = delta.dim();
    let mut lp = LpModel::new();
    let vars = Array2::from_shape_fn((rows, dim), |(n, d)| lp.add_var(format!("alpha_{n}_{d}")));
    for ((n, d), &v) in vars.indexed_iter() {
        lp.objective[v] = -delta[[n, d]];
        lp.add_constraint(format!("psi_{n}_{d}"), vec![(v, 1.0)], Sense::Le, 1.0);
    }
    for n in 0..rows {
        let row = (0..dim).map(|d| (vars[[n, d]], 1.0)).collect();
        lp.add_constraint(format!("eta_{n}"), row, Sense::Le, budget.local as f64);
    }
    lp.add_constraint("rho", vars.iter().map(|&v| (v, 1.0)).collect(), Sense::Le, budget.global as f64);
    let lp_optimum = -solve_lp(&lp)?.value;
    Ok(EtaRhoReport {
        greedy,
        lp_optimum,
        closed_form: budget_penalty(delta, &er.eta, er.rho, er.local, er.global),
        grid_min: grid_min(delta, er.local, er.global),
    })
}

/// Chain of bounds `g(default Ω) ≤ g(optimized Ω) ≤ LP ≤ exact ≤ primal`
/// for one competing class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sandwich {
    pub class: usize,
    pub dual_default: f64,
    pub dual_optimized: f64,
    pub lp: f64,
    pub exact: f64,
    pub primal_default: f64,
    pub primal_optimized: f64,
}

impl Sandwich {
    /// Descriptions of every violated inequality.
    pub fn violations(&self, tol: f64) -> Vec<String> {
        let chain = [
            ("g(default)", self.dual_default, "g(optimized)", self.dual_optimized),
            ("g(optimized)", self.dual_optimized, "LP", self.lp),
            ("LP", self.lp, "exact", self.exact),
            ("exact", self.exact, "primal(default)", self.primal_default),
            ("exact", self.exact, "primal(optimized)", self.primal_optimized),
        ];
        chain
            .iter()
            .filter(|(_, a, _, b)| *a > *b + tol)
            .map(|(na, a, nb, b)| format!("class {}: {na} = {a} > {nb} = {b}", self.class))
            .collect()
    }

    pub fn gap_default(&self) -> f64 {
        self.primal_default - self.dual_default
    }

    pub fn gap_optimized(&self) -> f64 {
        self.primal_optimized - self.dual_optimized
    }
}

/// Evaluates every link of the chain for the target's predicted class
/// against each competing class.
pub fn sandwich(sp: &SlicedProblem, params: &GcnParams, budget: Budget, pga: PgaConfig) -> Result<Vec<Sandwich>> {
    let y_star = gcn::forward_sliced(sp, params, None)?.predict();
    let bounds = compute_bounds(sp, params, budget);
    let k = params.num_classes();
    let mut out = Vec::with_capacity(k - 1);
    for y in (0..k).filter(|&y| y != y_star) {
        let c = class_difference(k, y_star, y);
        let def = dual_state(sp, params, &bounds, default_omega(&bounds), &c);
        let opt = dual::optimize_omega(sp, params, &bounds, &c, pga);
        let lp = solve_lp(&build_primal_lp(sp, params, &bounds, budget, &c))?.value;
        let exact = enumerate_exact_margin(sp, params, budget, y_star, y)?.exact_min_margin;
        out.push(Sandwich {
            class: y,
            dual_default: def.value,
            dual_optimized: opt.value,
            lp,
            exact,
            primal_default: attack::construct_and_evaluate(sp, params, &def, y_star, y)?,
            primal_optimized: attack::construct_and_evaluate(sp, params, &opt, y_star, y)?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr2;

    #[test]
    fn eta_rho_hand_example() {
        let r = check_eta_rho_optimality(&arr2(&[[3.0, 1.0], [2.0, 0.0]]), Budget::new(1, 1)).unwrap();
        assert!((r.lp_optimum - 3.0).abs() < 1e-12);
        assert!(r.holds(1e-9), "{r:?}");
    }

    #[test]
    fn eta_rho_zero_delta() {
        let r = check_eta_rho_optimality(&Array2::zeros((2, 3)), Budget::new(2, 2)).unwrap();
        assert_eq!(r.lp_optimum, 0.0);
        assert!(r.holds(1e-12));
    }

    #[test]
    fn one_node_hand_example_exact_margin_is_zero() {
        // Ĥ² ∈ {0, 2, −1}; logits (H, −H) with H = relu(Ĥ²) give margins 2H.
        use crate::graph::{slice, Graph, MessagePassing};
        let g = Graph::new(1, 2, 2, &[], &[]).unwrap();
        let mp = MessagePassing::gcn(&g);
        let sp = slice(&g, &mp, 0, 3).unwrap();
        let p = GcnParams::new(
            vec![2, 1, 2],
            vec![arr2(&[[2.0], [-1.0]]), arr2(&[[1.0, -1.0]])],
            vec![Array1::zeros(1), Array1::zeros(2)],
        )
        .unwrap();
        let r = enumerate_exact_margin(&sp, &p, Budget::new(1, 1), 0, 1).unwrap();
        assert_eq!(r.exact_min_margin, 0.0);
        assert_eq!(r.count_enumerated, 3);
        let r0 = enumerate_exact_margin(&sp, &p, Budget::new(1, 0), 0, 1).unwrap();
        assert_eq!(r0.count_enumerated, 1);
    }

    #[test]
    fn zero_budget_lp_is_clean_margin() {
        let inst = fixtures::tiny_instance(3);
        let b = Budget::new(1, 0);
        let bounds = compute_bounds(&inst.sp, &inst.params, b);
        let k = inst.params.num_classes();
        let y = (inst.y_star + 1) % k;
        let c = class_difference(k, inst.y_star, y);
        let lp = solve_lp(&build_primal_lp(&inst.sp, &inst.params, &bounds, b, &c)).unwrap();
        let logits = gcn::forward_sliced(&inst.sp, &inst.params, None).unwrap().logits;
        assert!((lp.value - (logits[inst.y_star] - logits[y])).abs() < 1e-9);
    }
}
