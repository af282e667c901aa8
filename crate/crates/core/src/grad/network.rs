//! Tape versions of the sliced forward pass, the activation bounds and the
//! dual objective.
//!
//! Every builder takes the discrete structure (bound picks, partition tags,
//! pivots of `η`/`ρ`) from the plain computation and re-expresses the values
//! as differentiable functions of the parameters with that structure fixed.

use ndarray::{Array1, Array2};

use super::{GatherEntry, Tape, Var};
use crate::bounds::{compute_bounds, ActivationBounds, Budget, Tag};
use crate::dual::{self, EtaRho, Omega};
use crate::error::{Error, Result};
use crate::gcn::GcnParams;
use crate::graph::SlicedProblem;

/// Parameters recorded on a tape.
#[derive(Debug, Clone)]
pub struct NetVars<'a> {
    pub params: &'a GcnParams,
    weights: Vec<Var>,
    /// Biases as `1 × h` rows.
    biases: Vec<Var>,
}

impl<'a> NetVars<'a> {
    /// Records `params`; they are differentiable when `trainable` is set.
    pub fn register(tape: &mut Tape, params: &'a GcnParams, trainable: bool) -> Self {
        let mut leaf = |m: Array2<f64>| if trainable { tape.param(m) } else { tape.constant(m) };
        let weights = params.weights.iter().map(|w| leaf(w.clone())).collect();
        let biases = params
            .biases
            .iter()
            .map(|b| leaf(b.clone().insert_axis(ndarray::Axis(0))))
            .collect();
        NetVars {
            params,
            weights,
            biases,
        }
    }

    pub fn weight(&self, l: usize) -> Var {
        self.weights[l - 1]
    }

    pub fn bias(&self, l: usize) -> Var {
        self.biases[l - 1]
    }

    /// Collects the parameter gradients into a structure shaped like the
    /// parameters (zeros where the loss does not depend on an entry).
    pub fn collect(&self, grads: &super::Gradients) -> GcnParams {
        let mut out = GcnParams::zeros(self.params.dims().to_vec());
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            out.weights[l] = grads.get_or_zero(*w, self.params.weights[l].dim());
            let bl = self.params.biases[l].len();
            out.biases[l] = grads.get_or_zero(*b, (1, bl)).row(0).to_owned();
        }
        out
    }
}

/// Exact logits of the target as a `1 × K` row. `dropout[l - 1]`, when
/// given, scales the input of layer `l` elementwise.
pub fn logits(tape: &mut Tape, sp: &SlicedProblem, net: &NetVars, attrs: &Array2<f64>, dropout: Option<&[Array2<f64>]>) -> Var {
    let layers = sp.layer_count;
    let mut h = tape.constant(attrs.clone());
    let mut out = h;
    for l in 1..layers {
        if let Some(masks) = dropout {
            let m = tape.constant(masks[l - 1].clone());
            h = tape.mul(h, m);
        }
        let a = tape.constant(sp.mp(l).clone());
        let ah = tape.matmul(a, h);
        let ahw = tape.matmul(ah, net.weight(l));
        let pre = tape.add_row(ahw, net.bias(l));
        if l + 1 < layers {
            h = tape.relu(pre);
        } else {
            out = pre;
        }
    }
    out
}

/// Bounds of one hidden layer on the tape, with its partition masks.
#[derive(Debug, Clone, Copy)]
pub struct LayerVars {
    pub lower: Var,
    pub upper: Var,
    pub nonneg: Var,
    pub crossing: Var,
}

fn tag_masks(tape: &mut Tape, tags: &Array2<Tag>) -> (Var, Var, Array2<bool>) {
    tape.note_decision(&tags.iter().map(|&t| t as u8).collect::<Vec<u8>>());
    let nonneg = tags.mapv(|t| if t == Tag::NonNeg { 1.0 } else { 0.0 });
    let crossing_bool = tags.mapv(|t| t == Tag::Crossing);
    let crossing = crossing_bool.mapv(|b| if b { 1.0 } else { 0.0 });
    (tape.constant(nonneg), tape.constant(crossing), crossing_bool)
}

/// Differentiable hidden-layer bounds following the picks and tags already
/// chosen in `bounds`.
pub fn bounds_on_tape(
    tape: &mut Tape,
    sp: &SlicedProblem,
    net: &NetVars,
    bounds: &ActivationBounds,
) -> Vec<LayerVars> {
    let mut out: Vec<LayerVars> = Vec::new();
    if sp.layer_count < 3 {
        return out;
    }
    let a = sp.mp(1);
    let x = &sp.sliced_attrs;
    let hidden = net.params.weight(1).ncols();
    let rows = a.nrows();
    let ac = tape.constant(a.clone());
    let xc = tape.constant(x.clone());
    let ax = tape.matmul(ac, xc);
    let axw = tape.matmul(ax, net.weight(1));
    let clean = tape.add_row(axw, net.bias(1));
    let w_pos = tape.relu(net.weight(1));
    let w_neg = tape.neg_part(net.weight(1));
    let picks = &bounds.first_layer_picks;
    let mut gathered = |which: &[Vec<(usize, usize)>], increase: bool| {
        let mut from_pos = Vec::new();
        let mut from_neg = Vec::new();
        for m in 0..rows {
            for j in 0..hidden {
                let out_idx = m * hidden + j;
                for &(n, d) in &which[out_idx] {
                    let e = GatherEntry {
                        out_idx,
                        in_idx: d * hidden + j,
                        coef: a[[m, n]],
                    };
                    let flips_up = x[[n, d]] < 0.5;
                    if flips_up == increase {
                        from_pos.push(e);
                    } else {
                        from_neg.push(e);
                    }
                }
            }
        }
        let gp = tape.gather(w_pos, (rows, hidden), from_pos);
        let gn = tape.gather(w_neg, (rows, hidden), from_neg);
        tape.add(gp, gn)
    };
    let up = gathered(&picks.upper, true);
    let down = gathered(&picks.lower, false);
    let upper = tape.add(clean, up);
    let lower = tape.sub(clean, down);
    let (nonneg, crossing, _) = tag_masks(tape, &bounds.layer(2).tags);
    out.push(LayerVars {
        lower,
        upper,
        nonneg,
        crossing,
    });
    for l in 3..sp.layer_count {
        let prev = *out.last().unwrap();
        let lo = tape.relu(prev.lower);
        let hi = tape.relu(prev.upper);
        let w = net.weight(l - 1);
        let wp = tape.relu(w);
        let wn = tape.neg_part(w);
        let a = tape.constant(sp.mp(l - 1).clone());
        let hp = tape.matmul(hi, wp);
        let ln = tape.matmul(lo, wn);
        let lp = tape.matmul(lo, wp);
        let hn = tape.matmul(hi, wn);
        let du = tape.sub(hp, ln);
        let dl = tape.sub(lp, hn);
        let au = tape.matmul(a, du);
        let al = tape.matmul(a, dl);
        let upper = tape.add_row(au, net.bias(l - 1));
        let lower = tape.add_row(al, net.bias(l - 1));
        let (nonneg, crossing, _) = tag_masks(tape, &bounds.layer(l).tags);
        out.push(LayerVars {
            lower,
            upper,
            nonneg,
            crossing,
        });
    }
    out
}

/// Where the crossing slopes of the dual come from.
#[derive(Debug, Clone, Copy)]
pub enum OmegaVars<'v> {
    /// `S / (S − R)`, differentiable through the bounds.
    Default,
    /// One tape value per hidden layer (`[l - 2]`).
    Given(&'v [Var]),
}

/// Dual objective `g` on the tape. The pivots in `eta_rho` must come from the
/// plain evaluation at the same point.
pub fn dual_on_tape(
    tape: &mut Tape,
    sp: &SlicedProblem,
    net: &NetVars,
    bounds: &ActivationBounds,
    layer_vars: &[LayerVars],
    omega: OmegaVars,
    eta_rho: &EtaRho,
    c: &Array1<f64>,
) -> Var {
    let layers = sp.layer_count;
    let crossing_bool: Vec<Array2<bool>> = bounds
        .layers
        .iter()
        .map(|lb| lb.tags.mapv(|t| t == Tag::Crossing))
        .collect();
    let mut phi = tape.constant((-c).insert_axis(ndarray::Axis(0)));
    let mut terms_pos: Vec<Var> = Vec::new();
    let mut terms_neg: Vec<Var> = Vec::new();
    let mut hat1 = phi;
    for l in (1..layers).rev() {
        let at = tape.constant(sp.mp(l).t().to_owned());
        let wt = tape.transpose(net.weight(l));
        let ap = tape.matmul(at, phi);
        let hat = tape.matmul(ap, wt);
        let bt = tape.transpose(net.bias(l));
        let pb = tape.matmul(phi, bt);
        terms_neg.push(tape.sum(pb));
        if l >= 2 {
            let lv = layer_vars[l - 2];
            let mask = crossing_bool[l - 2].clone();
            let gap = tape.sub(lv.upper, lv.lower);
            let ratio = tape.div_masked(lv.upper, gap, mask.clone());
            let sr = tape.mul(lv.upper, lv.lower);
            let offset = tape.div_masked(sr, gap, mask);
            let hat_pos = tape.relu(hat);
            let hat_neg = tape.neg_part(hat);
            let off = tape.mul(offset, hat_pos);
            terms_pos.push(tape.sum(off));
            let om = match omega {
                OmegaVars::Default => ratio,
                OmegaVars::Given(vs) => tape.mul(vs[l - 2], lv.crossing),
            };
            let lin = tape.mul(lv.nonneg, hat);
            let up = tape.mul(ratio, hat_pos);
            let down = tape.mul(om, hat_neg);
            let p = tape.add(lin, up);
            phi = tape.sub(p, down);
        } else {
            hat1 = hat;
        }
    }
    let x = &sp.sliced_attrs;
    let xc = tape.constant(x.clone());
    let not_x = tape.constant(x.mapv(|v| 1.0 - v));
    let hp = tape.relu(hat1);
    let hn = tape.neg_part(hat1);
    let dp = tape.mul(hp, not_x);
    let dn = tape.mul(hn, xc);
    let delta = tape.add(dp, dn);
    let xh = tape.mul(xc, hat1);
    terms_neg.push(tape.sum(xh));
    if eta_rho.global > 0 {
        let (rows, dim) = x.dim();
        let (pn, pd) = eta_rho.rho_pivot.expect("positive budget has a pivot");
        let rho_idx = pn * dim + pd;
        tape.note_decision(&(eta_rho.rho_pivot, &eta_rho.row_pivot));
        let rho = tape.gather(delta, (1, 1), vec![GatherEntry { out_idx: 0, in_idx: rho_idx, coef: 1.0 }]);
        let pivots: Vec<GatherEntry> = eta_rho
            .row_pivot
            .iter()
            .enumerate()
            .map(|(n, d)| GatherEntry {
                out_idx: n,
                in_idx: n * dim + d.expect("positive budget has row pivots"),
                coef: 1.0,
            })
            .collect();
        let o = tape.gather(delta, (rows, 1), pivots);
        let rho_col = tape.gather(
            delta,
            (rows, 1),
            (0..rows).map(|n| GatherEntry { out_idx: n, in_idx: rho_idx, coef: 1.0 }).collect(),
        );
        let o_minus = tape.sub(o, rho_col);
        let eta = tape.relu(o_minus);
        let eta_mat = tape.gather(
            eta,
            (rows, dim),
            (0..rows * dim).map(|i| GatherEntry { out_idx: i, in_idx: i / dim, coef: 1.0 }).collect(),
        );
        let rho_mat = tape.gather(
            delta,
            (rows, dim),
            (0..rows * dim).map(|i| GatherEntry { out_idx: i, in_idx: rho_idx, coef: 1.0 }).collect(),
        );
        let d1 = tape.sub(delta, eta_mat);
        let d2 = tape.sub(d1, rho_mat);
        let psi = tape.relu(d2);
        terms_neg.push(tape.sum(psi));
        let eta_sum = tape.sum(eta);
        terms_neg.push(tape.scale(eta_sum, eta_rho.local as f64));
        terms_neg.push(tape.scale(rho, eta_rho.global as f64));
    }
    let neg = tape.add_all(&terms_neg);
    if terms_pos.is_empty() {
        tape.scale(neg, -1.0)
    } else {
        let pos = tape.add_all(&terms_pos);
        tape.sub(pos, neg)
    }
}

/// Gradient of `g` with respect to `Ω` (zero outside the crossing set).
pub fn dual_omega_gradient(
    sp: &SlicedProblem,
    params: &GcnParams,
    bounds: &ActivationBounds,
    omega: &Omega,
    c: &Array1<f64>,
) -> Vec<Array2<f64>> {
    let state = dual::dual_state(sp, params, bounds, omega.clone(), c);
    let mut tape = Tape::new();
    let net = NetVars::register(&mut tape, params, false);
    let layer_vars: Vec<LayerVars> = bounds
        .layers
        .iter()
        .map(|lb| {
            let lower = tape.constant(lb.lower.clone());
            let upper = tape.constant(lb.upper.clone());
            let (nonneg, crossing, _) = tag_masks(&mut tape, &lb.tags);
            LayerVars {
                lower,
                upper,
                nonneg,
                crossing,
            }
        })
        .collect();
    let om: Vec<Var> = omega.layers.iter().map(|m| tape.param(m.clone())).collect();
    let g = dual_on_tape(&mut tape, sp, &net, bounds, &layer_vars, OmegaVars::Given(&om), &state.eta_rho, c);
    let grads = tape.backward(g).expect("dual objective is finite");
    om.iter()
        .zip(&omega.layers)
        .map(|(&v, m)| grads.get_or_zero(v, m.dim()))
        .collect()
}

/// Negated default-Ω dual values `p_k = −g(e_y − e_k)` as tape scalars
/// (`p_y` is the constant zero), with bounds recomputed from the current
/// parameters.
pub fn margin_vector_on_tape(
    tape: &mut Tape,
    sp: &SlicedProblem,
    net: &NetVars,
    budget: Budget,
    class: usize,
) -> Vec<Var> {
    let params = net.params;
    let bounds = compute_bounds(sp, params, budget);
    let layer_vars = bounds_on_tape(tape, sp, net, &bounds);
    let k = params.num_classes();
    (0..k)
        .map(|other| {
            if other == class {
                return tape.scalar(0.0);
            }
            let c = dual::class_difference(k, class, other);
            let state = dual::dual_state(sp, params, &bounds, dual::default_omega(&bounds), &c);
            let g = dual_on_tape(tape, sp, net, &bounds, &layer_vars, OmegaVars::Default, &state.eta_rho, &c);
            tape.scale(g, -1.0)
        })
        .collect()
}

/// Value, gradient and discrete-decision signature of a loss.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub value: f64,
    pub gradient: GcnParams,
    pub signature: u64,
}

/// Evaluates `loss` on a fresh tape and differentiates it with respect to
/// every parameter.
pub fn evaluate<F>(params: &GcnParams, loss: F) -> Result<Evaluation>
where
    F: FnOnce(&mut Tape, &NetVars) -> Result<Var>,
{
    let mut tape = Tape::new();
    let net = NetVars::register(&mut tape, params, true);
    let out = loss(&mut tape, &net)?;
    let value = tape.scalar_value(out);
    if !value.is_finite() {
        return Err(Error::NonFinite("loss".into()));
    }
    let grads = tape.backward(out)?;
    Ok(Evaluation {
        value,
        gradient: net.collect(&grads),
        signature: tape.signature(),
    })
}

/// [`evaluate`] without the signature.
pub fn gradient<F>(params: &GcnParams, loss: F) -> Result<(f64, GcnParams)>
where
    F: FnOnce(&mut Tape, &NetVars) -> Result<Var>,
{
    evaluate(params, loss).map(|e| (e.value, e.gradient))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::compute_bounds;
    use crate::dual::{class_difference, default_omega, dual_state};
    use crate::gcn::forward_sliced;
    use crate::graph::{slice, Graph, MessagePassing};
    use ndarray::{arr1, arr2};

    fn tiny() -> (SlicedProblem, GcnParams) {
        let g = Graph::new(4, 3, 2, &[(0, 1), (1, 2), (0, 3)], &[(0, 0), (1, 2), (2, 1), (3, 0), (3, 2)]).unwrap();
        let mp = MessagePassing::gcn(&g);
        let sp = slice(&g, &mp, 0, 3).unwrap();
        let p = GcnParams::new(
            vec![3, 2, 2],
            vec![
                arr2(&[[1.0, -0.5], [-1.0, 2.0], [0.5, 0.25]]),
                arr2(&[[1.0, -1.0], [-0.5, 0.75]]),
            ],
            vec![arr1(&[0.1, -0.2]), arr1(&[0.0, 0.3])],
        )
        .unwrap();
        (sp, p)
    }

    #[test]
    fn tape_logits_match_plain_forward() {
        let (sp, p) = tiny();
        let mut t = Tape::new();
        let net = NetVars::register(&mut t, &p, true);
        let z = logits(&mut t, &sp, &net, &sp.sliced_attrs, None);
        let plain = forward_sliced(&sp, &p, None).unwrap().logits;
        assert_eq!(t.value(z).row(0).to_owned(), plain);
        assert!(t.replay_matches());
    }

    #[test]
    fn tape_bounds_and_dual_match_plain() {
        let (sp, p) = tiny();
        for budget in [Budget::new(1, 0), Budget::new(1, 1), Budget::new(2, 3)] {
            let bounds = compute_bounds(&sp, &p, budget);
            let mut t = Tape::new();
            let net = NetVars::register(&mut t, &p, true);
            let lv = bounds_on_tape(&mut t, &sp, &net, &bounds);
            for (v, lb) in lv.iter().zip(&bounds.layers) {
                for (a, b) in t.value(v.upper).iter().zip(lb.upper.iter()) {
                    assert!((a - b).abs() < 1e-12);
                }
                for (a, b) in t.value(v.lower).iter().zip(lb.lower.iter()) {
                    assert!((a - b).abs() < 1e-12);
                }
            }
            for (a, b) in [(0, 1), (1, 0)] {
                let c = class_difference(2, a, b);
                let state = dual_state(&sp, &p, &bounds, default_omega(&bounds), &c);
                let g = dual_on_tape(&mut t, &sp, &net, &bounds, &lv, OmegaVars::Default, &state.eta_rho, &c);
                assert!((t.scalar_value(g) - state.value).abs() < 1e-12, "{budget:?}");
            }
        }
    }

    #[test]
    fn linear_chain_gradient_without_crossings() {
        // With Q = 0 the dual equals the clean margin, whose gradient with
        // respect to W2 is `(Ȧ² H¹)ᵀ c` for H¹ = relu(Ȧ¹ X W¹ + b¹).
        let (sp, p) = tiny();
        let c = class_difference(2, 0, 1);
        let (val, g) = gradient(&p, |t, net| {
            let z = logits(t, &sp, net, &sp.sliced_attrs, None);
            let cv = t.constant(c.clone().insert_axis(ndarray::Axis(1)));
            let m = t.matmul(z, cv);
            Ok(t.sum(m))
        })
        .unwrap();
        let trace = forward_sliced(&sp, &p, None).unwrap();
        assert!((val - (trace.logits[0] - trace.logits[1])).abs() < 1e-12);
        let ah = sp.mp(2).dot(&trace.post_activations[1]);
        let expected = ah.t().dot(&c.clone().insert_axis(ndarray::Axis(0)));
        for (a, b) in g.weights[1].iter().zip(expected.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(g.biases[1], c);
    }

    #[test]
    fn omega_gradient_vanishes_off_crossings() {
        let (sp, p) = tiny();
        let bounds = compute_bounds(&sp, &p, Budget::new(2, 3));
        let om = default_omega(&bounds);
        let grad = dual_omega_gradient(&sp, &p, &bounds, &om, &class_difference(2, 0, 1));
        for (gr, lb) in grad.iter().zip(&bounds.layers) {
            for (idx, &v) in gr.indexed_iter() {
                if lb.tags[idx] != Tag::Crossing {
                    assert_eq!(v, 0.0);
                }
            }
        }
    }
}
