//! The relaxed certification problem written out as an explicit LP.
//!
//! Variables: the relaxed attributes `X̃ ∈ [0, 1]` (first layer), the slacks
//! `ε̂ ≥ 0` with `|X̃ − Ẋ| ≤ ε̂`, and one variable per crossing neuron.
//! Stably active or inactive neurons and all pre-activations are substituted
//! as affine expressions, so they do not appear as variables. Constraint
//! names carry the multiplier they correspond to in the dual.

use ndarray::{Array1, Array2};

use super::lp::{LpModel, Sense};
use crate::bounds::{ActivationBounds, Budget, Tag};
use crate::gcn::GcnParams;
use crate::graph::SlicedProblem;

/// Affine function of the LP variables.
#[derive(Debug, Clone, Default)]
struct Affine {
    terms: Vec<(usize, f64)>,
    constant: f64,
}

impl Affine {
    fn constant(v: f64) -> Self {
        Affine {
            terms: Vec::new(),
            constant: v,
        }
    }

    fn var(i: usize) -> Self {
        Affine {
            terms: vec![(i, 1.0)],
            constant: 0.0,
        }
    }

    fn add_scaled(&mut self, other: &Affine, s: f64) {
        if s == 0.0 {
            return;
        }
        self.terms.extend(other.terms.iter().map(|&(i, a)| (i, a * s)));
        self.constant += other.constant * s;
    }

    fn compact(mut self) -> Self {
        self.terms.sort_by_key(|&(i, _)| i);
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(self.terms.len());
        for (i, a) in self.terms {
            match out.last_mut() {
                Some((j, acc)) if *j == i => *acc += a,
                _ => out.push((i, a)),
            }
        }
        out.retain(|&(_, a)| a != 0.0);
        Affine {
            terms: out,
            constant: self.constant,
        }
    }
}

/// `Ȧ H W + b` for a matrix of affine entries.
fn propagate(h: &Array2<Affine>, a: &Array2<f64>, w: &Array2<f64>, b: &Array1<f64>) -> Array2<Affine> {
    let (rows_in, width) = h.dim();
    let out_width = w.ncols();
    let mut hw: Array2<Affine> = Array2::from_elem((rows_in, out_width), Affine::default());
    for n in 0..rows_in {
        for j in 0..out_width {
            let mut acc = Affine::default();
            for d in 0..width {
                acc.add_scaled(&h[[n, d]], w[[d, j]]);
            }
            hw[[n, j]] = acc.compact();
        }
    }
    Array2::from_shape_fn((a.nrows(), out_width), |(m, j)| {
        let mut acc = Affine::constant(b[j]);
        for n in 0..rows_in {
            acc.add_scaled(&hw[[n, j]], a[[m, n]]);
        }
        acc.compact()
    })
}

/// Builds `min cᵀ Ĥ^(L)` over the relaxed perturbation set, or, when
/// `fixed_attrs` is given, over the ReLU relaxation with the attributes
/// pinned to that matrix.
pub fn build_lp(
    sp: &SlicedProblem,
    params: &GcnParams,
    bounds: &ActivationBounds,
    budget: Budget,
    c: &Array1<f64>,
    fixed_attrs: Option<&Array2<f64>>,
) -> LpModel {
    let mut lp = LpModel::new();
    let x = &sp.sliced_attrs;
    let (rows, dim) = x.dim();
    let mut h: Array2<Affine> = match fixed_attrs {
        Some(fixed) => fixed.mapv(Affine::constant),
        None => {
            let xv = Array2::from_shape_fn((rows, dim), |(n, d)| lp.add_var(format!("x_{n}_{d}")));
            let ev = Array2::from_shape_fn((rows, dim), |(n, d)| lp.add_var(format!("epshat_{n}_{d}")));
            for n in 0..rows {
                for d in 0..dim {
                    let (xi, ei) = (xv[[n, d]], ev[[n, d]]);
                    lp.add_constraint(format!("eps_plus_{n}_{d}"), vec![(xi, 1.0)], Sense::Le, 1.0);
                    lp.add_constraint(format!("gamma_plus_{n}_{d}"), vec![(xi, 1.0), (ei, -1.0)], Sense::Le, x[[n, d]]);
                    lp.add_constraint(format!("gamma_minus_{n}_{d}"), vec![(xi, 1.0), (ei, 1.0)], Sense::Ge, x[[n, d]]);
                }
                let row: Vec<(usize, f64)> = (0..dim).map(|d| (ev[[n, d]], 1.0)).collect();
                lp.add_constraint(format!("eta_{n}"), row, Sense::Le, budget.local as f64);
            }
            let all: Vec<(usize, f64)> = ev.iter().map(|&e| (e, 1.0)).collect();
            lp.add_constraint("rho", all, Sense::Le, budget.global as f64);
            xv.mapv(Affine::var)
        }
    };
    let layers = sp.layer_count;
    for l in 1..layers {
        let pre = propagate(&h, sp.mp(l), params.weight(l), params.bias(l));
        if l + 1 == layers {
            let mut obj = Affine::default();
            for (k, &ck) in c.iter().enumerate() {
                obj.add_scaled(&pre[[0, k]], ck);
            }
            let obj = obj.compact();
            for (i, a) in obj.terms {
                lp.objective[i] += a;
            }
            lp.objective_constant = obj.constant;
            break;
        }
        let lb = bounds.layer(l + 1);
        h = Array2::from_shape_fn(pre.dim(), |(m, j)| match lb.tags[[m, j]] {
            Tag::NonPos => Affine::default(),
            Tag::NonNeg => pre[[m, j]].clone(),
            Tag::Crossing => {
                let (r, s) = (lb.lower[[m, j]], lb.upper[[m, j]]);
                let v = lp.add_var(format!("h{}_{m}_{j}", l + 1));
                let e = &pre[[m, j]];
                // h ≥ Ĥ
                let mut terms = vec![(v, 1.0)];
                terms.extend(e.terms.iter().map(|&(i, a)| (i, -a)));
                lp.add_constraint(format!("mu{}_{m}_{j}", l + 1), terms, Sense::Ge, e.constant);
                // h (S − R) ≤ S (Ĥ − R)
                let mut terms = vec![(v, s - r)];
                terms.extend(e.terms.iter().map(|&(i, a)| (i, -s * a)));
                lp.add_constraint(format!("lambda{}_{m}_{j}", l + 1), terms, Sense::Le, s * e.constant - s * r);
                Affine::var(v)
            }
        });
    }
    lp
}

/// The relaxed LP over `X̃`.
pub fn build_primal_lp(
    sp: &SlicedProblem,
    params: &GcnParams,
    bounds: &ActivationBounds,
    budget: Budget,
    c: &Array1<f64>,
) -> LpModel {
    build_lp(sp, params, bounds, budget, c, None)
}

/// The ReLU relaxation with attributes fixed to `attrs`.
pub fn build_inner_lp(
    sp: &SlicedProblem,
    params: &GcnParams,
    bounds: &ActivationBounds,
    c: &Array1<f64>,
    attrs: &Array2<f64>,
) -> LpModel {
    build_lp(sp, params, bounds, bounds.budget, c, Some(attrs))
}

/// Relaxed attribute block of an LP solution of [`build_primal_lp`].
pub fn attribute_block(sp: &SlicedProblem, x: &[f64]) -> Array2<f64> {
    let (rows, dim) = sp.sliced_attrs.dim();
    Array2::from_shape_fn((rows, dim), |(n, d)| x[n * dim + d])
}
