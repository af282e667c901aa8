//! Pre-activation bounds of the sliced network under attribute perturbations.
//!
//! The first hidden layer exploits the binary inputs: flipping attribute
//! `(n, d)` changes `Ĥ^(2)_{mj}` by exactly `±Ȧ_{mn} W_{dj}`, so the largest
//! reachable increase is a budgeted top-k sum over per-node top-q flips. That
//! bound is exact. Deeper layers use interval arithmetic on the post-ReLU
//! bounds of the previous layer.

use ndarray::{Array1, Array2, Axis};

use crate::gcn::GcnParams;
use crate::graph::{Graph, MessagePassing, SlicedProblem};
use crate::select::top_k;

/// Perturbation budget: at most `local` flips per node and `global` flips in
/// total.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Budget {
    pub local: usize,
    pub global: usize,
}

impl Budget {
    pub fn new(local: usize, global: usize) -> Self {
        Budget { local, global }
    }

    /// Per-node budget clipped to the attribute dimension.
    pub fn effective_local(&self, num_features: usize) -> usize {
        self.local.min(num_features)
    }

    /// Global budget clipped to what `rows` nodes can absorb.
    pub fn effective_global(&self, rows: usize, num_features: usize) -> usize {
        self.global.min(rows * self.effective_local(num_features))
    }

    /// Default per-node budget: one percent of the attribute dimension, rounded up.
    pub fn default_local(num_features: usize) -> usize {
        num_features.div_ceil(100)
    }

    pub fn is_empty(&self) -> bool {
        self.local == 0 || self.global == 0
    }
}

/// Sign class of a pre-activation interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Tag {
    /// `R < 0 < S`: the ReLU needs the convex envelope.
    Crossing,
    /// `R ≥ 0`: the ReLU is the identity.
    NonNeg,
    /// `S ≤ 0`: the ReLU is zero.
    #[default]
    NonPos,
}

pub fn classify(lower: f64, upper: f64) -> Tag {
    if upper <= 0.0 {
        Tag::NonPos
    } else if lower >= 0.0 {
        Tag::NonNeg
    } else {
        Tag::Crossing
    }
}

pub fn classify_partition(lower: &Array2<f64>, upper: &Array2<f64>) -> Array2<Tag> {
    ndarray::Zip::from(lower)
        .and(upper)
        .map_collect(|&r, &s| classify(r, s))
}

/// Interval bounds on one layer's pre-activations `Ĥ^(l)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerBounds {
    pub lower: Array2<f64>,
    pub upper: Array2<f64>,
    pub tags: Array2<Tag>,
}

impl LayerBounds {
    pub fn new(lower: Array2<f64>, upper: Array2<f64>) -> Self {
        let tags = classify_partition(&lower, &upper);
        LayerBounds { lower, upper, tags }
    }

    pub fn mask(&self, tag: Tag) -> Array2<f64> {
        self.tags.mapv(|t| if t == tag { 1.0 } else { 0.0 })
    }

    pub fn num_crossing(&self) -> usize {
        self.tags.iter().filter(|&&t| t == Tag::Crossing).count()
    }
}

/// Flips chosen by the first-layer bound, per `(m, j)` entry in row-major
/// order. Each flip is a `(local input node, feature)` pair.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FirstLayerPicks {
    pub upper: Vec<Vec<(usize, usize)>>,
    pub lower: Vec<Vec<(usize, usize)>>,
}

/// First-layer bounds together with the flips that realize them.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstLayerBounds {
    pub clean: Array2<f64>,
    pub lower: Array2<f64>,
    pub upper: Array2<f64>,
    pub picks: FirstLayerPicks,
}

/// Bounds for the hidden layers `l = 2..L-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationBounds {
    pub budget: Budget,
    /// `layers[l - 2]` bounds `Ĥ^(l)`.
    pub layers: Vec<LayerBounds>,
    pub first_layer_picks: FirstLayerPicks,
}

impl ActivationBounds {
    pub fn layer(&self, l: usize) -> &LayerBounds {
        &self.layers[l - 2]
    }

    pub fn num_crossing(&self) -> usize {
        self.layers.iter().map(LayerBounds::num_crossing).sum()
    }
}

/// Largest possible increase (`increase = true`) or decrease of `x_d W_{dj}`
/// obtained by flipping attribute `d` of a row with values `x`.
#[inline]
pub(crate) fn flip_gain(x: f64, w: f64, increase: bool) -> f64 {
    let flips_up = x < 0.5;
    if flips_up == increase {
        w.max(0.0)
    } else {
        (-w).max(0.0)
    }
}

/// Per `(n, j)`, the `q` largest single-flip gains as `(gain, feature)`,
/// dropping zero gains.
fn per_node_top_flips(x: &Array2<f64>, w: &Array2<f64>, q: usize, increase: bool) -> Vec<Vec<Vec<(f64, usize)>>> {
    let (rows, dim) = x.dim();
    let hidden = w.ncols();
    (0..rows)
        .map(|n| {
            (0..hidden)
                .map(|j| {
                    let gains = (0..dim)
                        .map(|d| (flip_gain(x[[n, d]], w[[d, j]], increase), d))
                        .filter(|(g, _)| *g > 0.0)
                        .collect();
                    top_k(gains, q)
                })
                .collect()
        })
        .collect()
}

/// Exact first-hidden-layer bounds for every row of `Ȧ^(1)`.
pub fn first_layer_bounds(sp: &SlicedProblem, params: &GcnParams, budget: Budget) -> FirstLayerBounds {
    let a = sp.mp(1);
    let x = &sp.sliced_attrs;
    let w = params.weight(1);
    let b = params.bias(1);
    let q = budget.effective_local(x.ncols());
    let clean = a.dot(x).dot(w) + b.view().insert_axis(Axis(0));
    let inc = per_node_top_flips(x, w, q, true);
    let dec = per_node_top_flips(x, w, q, false);
    let (rows, hidden) = clean.dim();
    let mut upper = clean.clone();
    let mut lower = clean.clone();
    let mut picks = FirstLayerPicks::default();
    for m in 0..rows {
        for j in 0..hidden {
            for (table, increase) in [(&inc, true), (&dec, false)] {
                let mut cands = Vec::new();
                for (n, &amn) in a.row(m).iter().enumerate() {
                    if amn != 0.0 {
                        cands.extend(table[n][j].iter().map(|&(g, d)| (amn * g, (n, d))));
                    }
                }
                let chosen = top_k(cands, budget.global);
                let total: f64 = chosen.iter().map(|(v, _)| v).sum();
                let flips = chosen.into_iter().map(|(_, k)| k).collect();
                if increase {
                    upper[[m, j]] += total;
                    picks.upper.push(flips);
                } else {
                    lower[[m, j]] -= total;
                    picks.lower.push(flips);
                }
            }
        }
    }
    FirstLayerBounds {
        clean,
        lower,
        upper,
        picks,
    }
}

/// Interval propagation through one GCN layer, applied to the post-ReLU
/// bounds `max(R, 0)`, `max(S, 0)` of the previous layer.
pub fn deeper_layer_bounds(
    prev: &LayerBounds,
    a: &Array2<f64>,
    w: &Array2<f64>,
    b: &Array1<f64>,
) -> (Array2<f64>, Array2<f64>) {
    let lo = prev.lower.mapv(|v| v.max(0.0));
    let hi = prev.upper.mapv(|v| v.max(0.0));
    let wp = w.mapv(|v| v.max(0.0));
    let wn = w.mapv(|v| (-v).max(0.0));
    let bias = b.view().insert_axis(Axis(0));
    let upper = a.dot(&(hi.dot(&wp) - lo.dot(&wn))) + bias;
    let lower = a.dot(&(lo.dot(&wp) - hi.dot(&wn))) + bias;
    (lower, upper)
}

/// Bounds for all hidden layers of the sliced network.
pub fn compute_bounds(sp: &SlicedProblem, params: &GcnParams, budget: Budget) -> ActivationBounds {
    let mut layers = Vec::new();
    let mut first_layer_picks = FirstLayerPicks::default();
    if sp.layer_count >= 3 {
        let first = first_layer_bounds(sp, params, budget);
        first_layer_picks = first.picks;
        layers.push(LayerBounds::new(first.lower, first.upper));
        for l in 3..sp.layer_count {
            let (lower, upper) = deeper_layer_bounds(
                layers.last().unwrap(),
                sp.mp(l - 1),
                params.weight(l - 1),
                params.bias(l - 1),
            );
            layers.push(LayerBounds::new(lower, upper));
        }
    }
    ActivationBounds {
        budget,
        layers,
        first_layer_picks,
    }
}

/// First-layer bounds for every node of the graph at once, with a count of
/// the elementary candidate evaluations performed.
#[derive(Debug, Clone)]
pub struct FullGraphBounds {
    pub lower: Array2<f64>,
    pub upper: Array2<f64>,
    pub operations: u64,
}

pub fn full_graph_first_layer_bounds(
    graph: &Graph,
    mp: &MessagePassing,
    params: &GcnParams,
    budget: Budget,
) -> FullGraphBounds {
    let w = params.weight(1);
    let hidden = w.ncols();
    let dim = graph.num_features();
    let q = budget.effective_local(dim);
    let mut ops = 0u64;
    let mut clean = Array2::zeros((graph.num_nodes(), hidden));
    let mut inc = Vec::with_capacity(graph.num_nodes());
    let mut dec = Vec::with_capacity(graph.num_nodes());
    for n in 0..graph.num_nodes() {
        let x: Vec<f64> = (0..dim).map(|d| if graph.attribute(n, d) { 1.0 } else { 0.0 }).collect();
        let mut inc_n = Vec::with_capacity(hidden);
        let mut dec_n = Vec::with_capacity(hidden);
        for j in 0..hidden {
            let mut up = Vec::with_capacity(dim);
            let mut down = Vec::with_capacity(dim);
            for d in 0..dim {
                ops += 1;
                up.push((flip_gain(x[d], w[[d, j]], true), d));
                down.push((flip_gain(x[d], w[[d, j]], false), d));
            }
            inc_n.push(top_k(up, q));
            dec_n.push(top_k(down, q));
        }
        for &d in graph.attributes(n) {
            let mut row = clean.row_mut(n);
            row += &w.row(d);
        }
        inc.push(inc_n);
        dec.push(dec_n);
    }
    let mut lower = mp.matrix().matmul(&clean) + params.bias(1).view().insert_axis(Axis(0));
    let mut upper = lower.clone();
    for m in 0..graph.num_nodes() {
        for j in 0..hidden {
            let mut up = Vec::new();
            let mut down = Vec::new();
            for (n, amn) in mp.matrix().row(m) {
                for i in 0..q {
                    ops += 1;
                    up.push((amn * inc[n][j][i].0, (n, i)));
                    down.push((amn * dec[n][j][i].0, (n, i)));
                }
            }
            upper[[m, j]] += top_k(up, budget.global).iter().map(|(v, _)| v).sum::<f64>();
            lower[[m, j]] -= top_k(down, budget.global).iter().map(|(v, _)| v).sum::<f64>();
        }
    }
    FullGraphBounds {
        lower,
        upper,
        operations: ops,
    }
}
