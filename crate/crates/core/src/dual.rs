//! Dual lower bounds on the worst-case margin and the resulting certificates.
//!
//! For a class-difference vector `c` the dual objective `g` is evaluated by a
//! backward pass through the sliced network (`Φ`, `Φ̂`), followed by the
//! closed-form optimal budget multipliers `η` (per node) and `ρ` (global).
//! Any `Ω ∈ [0, 1]` on the crossing neurons gives a valid lower bound; the
//! default `Ω = S / (S − R)` needs no optimization, and projected gradient
//! ascent can tighten it.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::attack::{self, Perturbation};
use crate::bounds::{compute_bounds, ActivationBounds, Budget, Tag};
use crate::gcn::{self, GcnParams};
use crate::graph::SlicedProblem;
use crate::grad::network;
use crate::select::top_k;

/// Envelope slopes for the crossing neurons; `layers[l - 2]` belongs to
/// `Ĥ^(l)`. Entries outside the crossing set are zero and never read.
#[derive(Debug, Clone, PartialEq)]
pub struct Omega {
    pub layers: Vec<Array2<f64>>,
}

impl Omega {
    pub fn layer(&self, l: usize) -> &Array2<f64> {
        &self.layers[l - 2]
    }

    pub fn is_feasible(&self) -> bool {
        self.layers.iter().all(|m| m.iter().all(|&v| (0.0..=1.0).contains(&v)))
    }
}

/// `Ω = S / (S − R)` on crossing entries.
pub fn default_omega(bounds: &ActivationBounds) -> Omega {
    let layers = bounds
        .layers
        .iter()
        .map(|lb| {
            ndarray::Zip::from(&lb.lower)
                .and(&lb.upper)
                .and(&lb.tags)
                .map_collect(|&r, &s, &t| if t == Tag::Crossing { s / (s - r) } else { 0.0 })
        })
        .collect();
    Omega { layers }
}

/// Result of the dual backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Backward {
    /// `phi[l - 2]` is `Φ^(l)` for `l = 2..L`.
    pub phi: Vec<Array2<f64>>,
    /// `phi_hat[l - 1]` is `Φ̂^(l)` for `l = 1..L-1`.
    pub phi_hat: Vec<Array2<f64>>,
    /// Per-flip improvement of the relaxed objective, indexed like the
    /// sliced attributes.
    pub delta: Array2<f64>,
}

impl Backward {
    pub fn phi(&self, l: usize) -> &Array2<f64> {
        &self.phi[l - 2]
    }

    pub fn phi_hat(&self, l: usize) -> &Array2<f64> {
        &self.phi_hat[l - 1]
    }
}

fn pos(v: f64) -> f64 {
    v.max(0.0)
}

fn neg(v: f64) -> f64 {
    (-v).max(0.0)
}

/// Backward pass of the dual network for objective vector `c`.
pub fn backward_phi(
    sp: &SlicedProblem,
    params: &GcnParams,
    bounds: &ActivationBounds,
    omega: &Omega,
    c: &Array1<f64>,
) -> Backward {
    let layers = sp.layer_count;
    let mut phi = vec![Array2::zeros((0, 0)); layers - 1];
    let mut phi_hat = vec![Array2::zeros((0, 0)); layers - 1];
    phi[layers - 2] = (-c).insert_axis(ndarray::Axis(0));
    for l in (1..layers).rev() {
        let hat = sp.mp(l).t().dot(&phi[l - 1]).dot(&params.weight(l).t());
        if l >= 2 {
            let lb = bounds.layer(l);
            let om = omega.layer(l);
            let mut p = Array2::zeros(hat.dim());
            for ((idx, &h), out) in hat.indexed_iter().zip(p.iter_mut()) {
                *out = match lb.tags[idx] {
                    Tag::NonPos => 0.0,
                    Tag::NonNeg => h,
                    Tag::Crossing => {
                        let (r, s) = (lb.lower[idx], lb.upper[idx]);
                        s / (s - r) * pos(h) - om[idx] * neg(h)
                    }
                };
            }
            phi[l - 2] = p;
        }
        phi_hat[l - 1] = hat;
    }
    let x = &sp.sliced_attrs;
    let delta = ndarray::Zip::from(&phi_hat[0])
        .and(x)
        .map_collect(|&h, &xv| pos(h) * (1.0 - xv) + neg(h) * xv);
    Backward { phi, phi_hat, delta }
}

/// Closed-form optimal budget multipliers for a fixed `Δ`, with the
/// selections that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct EtaRho {
    pub eta: Vec<f64>,
    pub rho: f64,
    /// Per node, the feature attaining the q-th largest `Δ` of its row
    /// (`None` when no flip is admissible).
    pub row_pivot: Vec<Option<usize>>,
    /// Entry of `Δ` whose value is `ρ`.
    pub rho_pivot: Option<(usize, usize)>,
    /// The selected flip set `S_Q`, largest first.
    pub selected: Vec<(usize, usize)>,
    /// Effective budgets used by the objective.
    pub local: usize,
    pub global: usize,
}

/// Optimal `η`, `ρ` for a fixed `Δ ≥ 0`.
///
/// With an empty effective budget every flip must be priced out, so `ρ` is
/// set to `max Δ` (its coefficient is zero) and `Ψ` vanishes.
pub fn closed_form_eta_rho(delta: &Array2<f64>, budget: Budget) -> EtaRho {
    let (rows, dim) = delta.dim();
    let local = budget.effective_local(dim);
    let global = budget.effective_global(rows, dim);
    if global == 0 {
        let mut rho = 0.0;
        let mut rho_pivot = None;
        for ((n, d), &v) in delta.indexed_iter() {
            if v > rho {
                rho = v;
                rho_pivot = Some((n, d));
            }
        }
        return EtaRho {
            eta: vec![0.0; rows],
            rho,
            row_pivot: vec![None; rows],
            rho_pivot,
            selected: Vec::new(),
            local,
            global,
        };
    }
    let mut row_pivot = Vec::with_capacity(rows);
    let mut row_min = Vec::with_capacity(rows);
    let mut candidates = Vec::with_capacity(rows * local);
    for n in 0..rows {
        let row: Vec<(f64, usize)> = delta.row(n).iter().copied().zip(0..).collect();
        let best = top_k(row, local);
        let &(o_n, d_min) = best.last().expect("local budget is positive");
        row_pivot.push(Some(d_min));
        row_min.push(o_n);
        candidates.extend(best.into_iter().map(|(v, d)| (v, (n, d))));
    }
    let chosen = top_k(candidates, global);
    let &(rho, pivot) = chosen.last().expect("global budget is positive");
    let eta = row_min.iter().map(|&o| (o - rho).max(0.0)).collect();
    EtaRho {
        eta,
        rho,
        row_pivot,
        rho_pivot: Some(pivot),
        selected: chosen.into_iter().map(|(_, k)| k).collect(),
        local,
        global,
    }
}

/// `Ψ = max(Δ − (η_n + ρ), 0)`.
pub fn psi(delta: &Array2<f64>, eta: &[f64], rho: f64) -> Array2<f64> {
    let mut out = delta.clone();
    for (n, mut row) in out.rows_mut().into_iter().enumerate() {
        row.mapv_inplace(|v| (v - eta[n] - rho).max(0.0));
    }
    out
}

/// Dual objective from a finished backward pass and given multipliers.
/// `local`/`global` are the budgets multiplying `Σ η` and `ρ`.
pub fn dual_objective(
    sp: &SlicedProblem,
    params: &GcnParams,
    bounds: &ActivationBounds,
    bw: &Backward,
    eta: &[f64],
    rho: f64,
    local: usize,
    global: usize,
) -> f64 {
    let mut g = 0.0;
    for l in 2..sp.layer_count {
        let lb = bounds.layer(l);
        for (idx, &h) in bw.phi_hat(l).indexed_iter() {
            if lb.tags[idx] == Tag::Crossing {
                let (r, s) = (lb.lower[idx], lb.upper[idx]);
                g += s * r / (s - r) * pos(h);
            }
        }
    }
    for l in 1..sp.layer_count {
        g -= bw.phi(l + 1).dot(params.bias(l)).sum();
    }
    g -= (&sp.sliced_attrs * bw.phi_hat(1)).sum();
    g -= psi(&bw.delta, eta, rho).sum();
    g -= local as f64 * eta.iter().sum::<f64>();
    g -= global as f64 * rho;
    g
}

/// Dual value for explicit `(Ω, η, ρ)`; any nonnegative multipliers give a
/// lower bound on the worst-case value of `cᵀ Ĥ^(L)`.
pub fn evaluate_dual(
    sp: &SlicedProblem,
    params: &GcnParams,
    bounds: &ActivationBounds,
    omega: &Omega,
    eta: &[f64],
    rho: f64,
    c: &Array1<f64>,
) -> f64 {
    let bw = backward_phi(sp, params, bounds, omega, c);
    let dim = sp.num_features();
    let rows = bw.delta.nrows();
    let b = bounds.budget;
    dual_objective(
        sp,
        params,
        bounds,
        &bw,
        eta,
        rho,
        b.effective_local(dim),
        b.effective_global(rows, dim),
    )
}

/// Dual variables, derived tensors and the objective value.
#[derive(Debug, Clone, PartialEq)]
pub struct DualState {
    pub omega: Omega,
    pub backward: Backward,
    pub eta_rho: EtaRho,
    pub psi: Array2<f64>,
    pub value: f64,
}

impl DualState {
    pub fn delta(&self) -> &Array2<f64> {
        &self.backward.delta
    }

    pub fn eta(&self) -> &[f64] {
        &self.eta_rho.eta
    }

    pub fn rho(&self) -> f64 {
        self.eta_rho.rho
    }
}

/// Dual state for a fixed `Ω`, with the optimal `η`, `ρ`.
pub fn dual_state(
    sp: &SlicedProblem,
    params: &GcnParams,
    bounds: &ActivationBounds,
    omega: Omega,
    c: &Array1<f64>,
) -> DualState {
    let backward = backward_phi(sp, params, bounds, &omega, c);
    let eta_rho = closed_form_eta_rho(&backward.delta, bounds.budget);
    let value = dual_objective(
        sp,
        params,
        bounds,
        &backward,
        &eta_rho.eta,
        eta_rho.rho,
        eta_rho.local,
        eta_rho.global,
    );
    let psi = psi(&backward.delta, &eta_rho.eta, eta_rho.rho);
    DualState {
        omega,
        backward,
        eta_rho,
        psi,
        value,
    }
}

/// Projected gradient ascent schedule for `Ω`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PgaConfig {
    pub steps: usize,
    pub step_size: f64,
    pub decay: f64,
}

impl Default for PgaConfig {
    fn default() -> Self {
        PgaConfig {
            steps: 200,
            step_size: 0.05,
            decay: 0.99,
        }
    }
}

/// Tightens the dual bound by projected gradient ascent on `Ω`, starting from
/// the default slopes and re-solving `η`, `ρ` in closed form at every
/// iterate. Steps are scaled by the largest gradient entry, so `step_size`
/// is the largest per-entry move. Returns the best iterate.
pub fn optimize_omega(
    sp: &SlicedProblem,
    params: &GcnParams,
    bounds: &ActivationBounds,
    c: &Array1<f64>,
    config: PgaConfig,
) -> DualState {
    let mut best = dual_state(sp, params, bounds, default_omega(bounds), c);
    if config.steps == 0 || bounds.num_crossing() == 0 {
        return best;
    }
    let mut omega = best.omega.clone();
    let mut step = config.step_size;
    for _ in 0..config.steps {
        let grad = network::dual_omega_gradient(sp, params, bounds, &omega, c);
        let scale = grad
            .iter()
            .zip(&bounds.layers)
            .flat_map(|(gr, lb)| gr.iter().zip(&lb.tags).filter(|(_, &t)| t == Tag::Crossing).map(|(g, _)| g.abs()))
            .fold(0.0, f64::max);
        if scale == 0.0 {
            break;
        }
        for ((om, gr), lb) in omega.layers.iter_mut().zip(&grad).zip(&bounds.layers) {
            ndarray::Zip::from(om).and(gr).and(&lb.tags).for_each(|o, &g, &t| {
                if t == Tag::Crossing {
                    *o = (*o + step * g / scale).clamp(0.0, 1.0);
                }
            });
        }
        step *= config.decay;
        let state = dual_state(sp, params, bounds, omega.clone(), c);
        if state.value > best.value {
            best = state;
        }
    }
    best
}

/// `c = e_a − e_b`.
pub fn class_difference(num_classes: usize, a: usize, b: usize) -> Array1<f64> {
    let mut c = Array1::zeros(num_classes);
    c[a] += 1.0;
    c[b] -= 1.0;
    c
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CertifyMode {
    /// Single evaluation at `Ω = S / (S − R)`.
    Default,
    /// Projected gradient ascent on `Ω`.
    Optimized(PgaConfig),
}

impl CertifyMode {
    pub fn optimized() -> Self {
        CertifyMode::Optimized(PgaConfig::default())
    }

    fn solve(
        self,
        sp: &SlicedProblem,
        params: &GcnParams,
        bounds: &ActivationBounds,
        c: &Array1<f64>,
    ) -> DualState {
        match self {
            CertifyMode::Default => dual_state(sp, params, bounds, default_omega(bounds), c),
            CertifyMode::Optimized(cfg) => optimize_omega(sp, params, bounds, c, cfg),
        }
    }
}

/// Negated dual values `p_k = −g(e_y − e_k)`, with `p_y = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginVector {
    pub class: usize,
    pub entries: Vec<f64>,
}

impl MarginVector {
    /// Certified robust: every competing entry is negative.
    pub fn is_certified(&self) -> bool {
        self.entries
            .iter()
            .enumerate()
            .all(|(k, &p)| k == self.class || p < 0.0)
    }

    /// Smallest certified margin `min_{k≠y} −p_k`.
    pub fn worst_case_margin(&self) -> f64 {
        self.entries
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != self.class)
            .map(|(_, &p)| -p)
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn margin_vector(
    sp: &SlicedProblem,
    params: &GcnParams,
    bounds: &ActivationBounds,
    class: usize,
    mode: CertifyMode,
) -> MarginVector {
    let k = params.num_classes();
    let entries = (0..k)
        .map(|other| {
            if other == class {
                0.0
            } else {
                -mode.solve(sp, params, bounds, &class_difference(k, class, other)).value
            }
        })
        .collect();
    MarginVector { class, entries }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Robust,
    NonRobust,
    Undecided,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Robust => "robust",
            Status::NonRobust => "non_robust",
            Status::Undecided => "undecided",
        }
    }
}

/// Per-node certification outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub node: usize,
    pub budget: Budget,
    pub y_star: usize,
    /// Dual lower bound on `logit_{y*} − logit_k`; zero at `y*`.
    pub dual_lower: Vec<f64>,
    /// Exact margin of the dual-guided perturbation; zero at `y*`.
    pub primal_margins: Vec<f64>,
    /// Dual-guided perturbation per class (empty at `y*`).
    pub attacks: Vec<Perturbation>,
    pub status: Status,
}

impl Certificate {
    /// Classes the constructed perturbations flip the prediction to, most
    /// negative margin first.
    pub fn flipping_classes(&self) -> Vec<usize> {
        let mut ks: Vec<usize> = (0..self.primal_margins.len())
            .filter(|&k| k != self.y_star && self.primal_margins[k] < 0.0)
            .collect();
        ks.sort_by(|&a, &b| self.primal_margins[a].total_cmp(&self.primal_margins[b]));
        ks
    }

    pub fn to_json_line(&self) -> String {
        #[derive(Serialize)]
        struct Line<'a> {
            node: usize,
            q: usize,
            #[serde(rename = "Q")]
            global: usize,
            y_star: usize,
            dual_lower: &'a [f64],
            primal_margin: &'a [f64],
            status: Status,
        }
        serde_json::to_string(&Line {
            node: self.node,
            q: self.budget.local,
            global: self.budget.global,
            y_star: self.y_star,
            dual_lower: &self.dual_lower,
            primal_margin: &self.primal_margins,
            status: self.status,
        })
        .expect("certificate serializes")
    }
}

/// Certifies robustness (dual) or non-robustness (primal) of the target of
/// `sp` for class `y_star`.
pub fn certify(
    sp: &SlicedProblem,
    params: &GcnParams,
    budget: Budget,
    y_star: usize,
    mode: CertifyMode,
) -> crate::Result<Certificate> {
    let bounds = compute_bounds(sp, params, budget);
    let k = params.num_classes();
    let mut dual_lower = vec![0.0; k];
    let mut primal_margins = vec![0.0; k];
    let mut attacks = vec![Perturbation::empty(&sp.sliced_attrs); k];
    for other in (0..k).filter(|&o| o != y_star) {
        let c = class_difference(k, y_star, other);
        let state = mode.solve(sp, params, &bounds, &c);
        dual_lower[other] = state.value;
        let pert = attack::construct(&state, &sp.sliced_attrs);
        let trace = gcn::forward_sliced(sp, params, Some(&pert.perturbed_attrs))?;
        primal_margins[other] = trace.logits[y_star] - trace.logits[other];
        attacks[other] = pert;
    }
    let competing = || (0..k).filter(|&o| o != y_star);
    let status = if competing().all(|o| dual_lower[o] > 0.0) {
        Status::Robust
    } else if competing().any(|o| primal_margins[o] < 0.0) {
        Status::NonRobust
    } else {
        Status::Undecided
    };
    Ok(Certificate {
        node: sp.target,
        budget,
        y_star,
        dual_lower,
        primal_margins,
        attacks,
        status,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::LayerBounds;
    use crate::graph::{slice, Graph, MessagePassing};
    use ndarray::arr2;

    fn bounds_of(lower: Array2<f64>, upper: Array2<f64>) -> ActivationBounds {
        ActivationBounds {
            budget: Budget::new(1, 1),
            layers: vec![LayerBounds::new(lower, upper)],
            first_layer_picks: Default::default(),
        }
    }

    #[test]
    fn default_omega_examples() {
        let b = bounds_of(arr2(&[[-2.0, -1.0, -3.0, 1.0]]), arr2(&[[2.0, 3.0, 1.0, 2.0]]));
        let om = default_omega(&b);
        assert_eq!(om.layer(2), &arr2(&[[0.5, 0.75, 0.25, 0.0]]));
        assert!(om.is_feasible());
    }

    #[test]
    fn eta_rho_examples() {
        let delta = arr2(&[[3.0, 1.0], [2.0, 0.0]]);
        let er = closed_form_eta_rho(&delta, Budget::new(1, 1));
        assert_eq!(er.row_pivot, vec![Some(0), Some(0)]);
        assert_eq!(er.rho, 3.0);
        assert_eq!(er.eta, vec![0.0, 0.0]);
        assert_eq!(er.selected, vec![(0, 0)]);

        let er = closed_form_eta_rho(&delta, Budget::new(1, 2));
        assert_eq!(er.rho, 2.0);
        assert_eq!(er.eta, vec![1.0, 0.0]);
        assert_eq!(er.selected, vec![(0, 0), (1, 0)]);
    }

    #[test]
    fn eta_rho_zero_delta() {
        let er = closed_form_eta_rho(&Array2::zeros((3, 4)), Budget::new(2, 3));
        assert_eq!(er.rho, 0.0);
        assert!(er.eta.iter().all(|&e| e == 0.0));
    }

    #[test]
    fn empty_budget_prices_out_every_flip() {
        let delta = arr2(&[[3.0, 1.0], [2.0, 0.0]]);
        for budget in [Budget::new(0, 3), Budget::new(2, 0)] {
            let er = closed_form_eta_rho(&delta, budget);
            assert!(er.selected.is_empty());
            assert_eq!(er.eta, vec![0.0, 0.0]);
            assert_eq!(er.rho, 3.0);
            assert_eq!(psi(&delta, &er.eta, er.rho).sum(), 0.0);
        }
    }

    #[test]
    fn ties_resolve_to_smaller_indices() {
        let delta = arr2(&[[1.0, 1.0], [1.0, 1.0]]);
        let er = closed_form_eta_rho(&delta, Budget::new(1, 1));
        assert_eq!(er.selected, vec![(0, 0)]);
        assert_eq!(er.row_pivot, vec![Some(0), Some(0)]);
    }

    fn tiny() -> (SlicedProblem, GcnParams) {
        let g = Graph::new(3, 3, 2, &[(0, 1), (1, 2)], &[(0, 0), (1, 2), (2, 1)]).unwrap();
        let mp = MessagePassing::gcn(&g);
        let sp = slice(&g, &mp, 0, 3).unwrap();
        let p = GcnParams::new(
            vec![3, 2, 2],
            vec![
                arr2(&[[1.0, -0.5], [-1.0, 2.0], [0.5, 0.25]]),
                arr2(&[[1.0, -1.0], [-0.5, 0.75]]),
            ],
            vec![ndarray::arr1(&[0.1, -0.2]), ndarray::arr1(&[0.0, 0.3])],
        )
        .unwrap();
        (sp, p)
    }

    #[test]
    fn zero_objective_gives_zero_dual() {
        let (sp, p) = tiny();
        let bounds = compute_bounds(&sp, &p, Budget::new(1, 2));
        let state = dual_state(&sp, &p, &bounds, default_omega(&bounds), &Array1::zeros(2));
        assert_eq!(state.value, 0.0);
        assert!(state.backward.delta.iter().all(|&v| v == 0.0));
        assert!(state.backward.phi_hat.iter().all(|m| m.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn empty_budget_dual_is_clean_margin() {
        let (sp, p) = tiny();
        let bounds = compute_bounds(&sp, &p, Budget::new(1, 0));
        assert_eq!(bounds.num_crossing(), 0);
        let c = class_difference(2, 0, 1);
        let state = dual_state(&sp, &p, &bounds, default_omega(&bounds), &c);
        let logits = gcn::forward_sliced(&sp, &p, None).unwrap().logits;
        assert!((state.value - (logits[0] - logits[1])).abs() < 1e-12);
    }

    #[test]
    fn without_crossings_backward_is_linear() {
        let (sp, p) = tiny();
        let bounds = compute_bounds(&sp, &p, Budget::new(0, 0));
        let c = class_difference(2, 1, 0);
        let bw = backward_phi(&sp, &p, &bounds, &default_omega(&bounds), &c);
        let lb = bounds.layer(2);
        for (idx, &h) in bw.phi_hat(2).indexed_iter() {
            let expected = if lb.tags[idx] == Tag::NonNeg { h } else { 0.0 };
            assert_eq!(bw.phi(2)[idx], expected);
        }
    }

    #[test]
    fn margin_vector_has_zero_at_class() {
        let (sp, p) = tiny();
        let bounds = compute_bounds(&sp, &p, Budget::new(1, 1));
        let mv = margin_vector(&sp, &p, &bounds, 0, CertifyMode::Default);
        assert_eq!(mv.entries[0], 0.0);
        let g = dual_state(&sp, &p, &bounds, default_omega(&bounds), &class_difference(2, 0, 1)).value;
        assert_eq!(mv.entries[1], -g);
        assert_eq!(mv.is_certified(), g > 0.0);
    }

    #[test]
    fn zero_pga_steps_return_default_state() {
        let (sp, p) = tiny();
        let bounds = compute_bounds(&sp, &p, Budget::new(1, 2));
        let c = class_difference(2, 0, 1);
        let cfg = PgaConfig { steps: 0, ..Default::default() };
        let opt = optimize_omega(&sp, &p, &bounds, &c, cfg);
        assert_eq!(opt, dual_state(&sp, &p, &bounds, default_omega(&bounds), &c));
    }

    #[test]
    fn empty_budget_certifies_predicted_class() {
        let (sp, p) = tiny();
        let y = gcn::forward_sliced(&sp, &p, None).unwrap().predict();
        let cert = certify(&sp, &p, Budget::new(1, 0), y, CertifyMode::Default).unwrap();
        assert_eq!(cert.status, Status::Robust);
        assert_eq!(cert.dual_lower[y], 0.0);
    }
}
