//! Exact GCN forward passes, parameters and the checkpoint format.

use ndarray::{Array1, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, MessagePassing, SlicedProblem};
use crate::select;

/// Weights and biases of an `L`-layer GCN. Layer `l` (1-based) maps width
/// `dims[l-1]` to `dims[l]`; `dims[0]` is the attribute dimension and
/// `dims[L-1]` the number of classes.
#[derive(Debug, Clone, PartialEq)]
pub struct GcnParams {
    dims: Vec<usize>,
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

impl GcnParams {
    pub fn new(dims: Vec<usize>, weights: Vec<Array2<f64>>, biases: Vec<Array1<f64>>) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::Config(format!("a GCN needs at least 2 layers, got dims {dims:?}")));
        }
        if weights.len() != dims.len() - 1 || biases.len() != dims.len() - 1 {
            return Err(Error::shape("layer count", dims.len() - 1, weights.len().min(biases.len())));
        }
        for l in 0..dims.len() - 1 {
            if weights[l].dim() != (dims[l], dims[l + 1]) {
                return Err(Error::shape(
                    format!("W^({})", l + 1),
                    format!("{}x{}", dims[l], dims[l + 1]),
                    format!("{}x{}", weights[l].nrows(), weights[l].ncols()),
                ));
            }
            if biases[l].len() != dims[l + 1] {
                return Err(Error::shape(format!("b^({})", l + 1), dims[l + 1], biases[l].len()));
            }
        }
        let params = GcnParams { dims, weights, biases };
        if !params.is_finite() {
            return Err(Error::NonFinite("GCN parameters".into()));
        }
        Ok(params)
    }

    pub fn zeros(dims: Vec<usize>) -> Self {
        let weights = dims.windows(2).map(|w| Array2::zeros((w[0], w[1]))).collect();
        let biases = dims[1..].iter().map(|&h| Array1::zeros(h)).collect();
        GcnParams { dims, weights, biases }
    }

    /// Glorot-uniform weights and zero biases from a seeded generator.
    pub fn glorot(dims: Vec<usize>, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = GcnParams::zeros(dims);
        for w in &mut params.weights {
            let (fan_in, fan_out) = w.dim();
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            w.mapv_inplace(|_| rng.gen_range(-limit..limit));
        }
        params
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn layer_count(&self) -> usize {
        self.dims.len()
    }

    pub fn num_features(&self) -> usize {
        self.dims[0]
    }

    pub fn num_classes(&self) -> usize {
        *self.dims.last().unwrap()
    }

    /// `W^(l)`, 1-based.
    pub fn weight(&self, l: usize) -> &Array2<f64> {
        &self.weights[l - 1]
    }

    /// `b^(l)`, 1-based.
    pub fn bias(&self, l: usize) -> &Array1<f64> {
        &self.biases[l - 1]
    }

    pub fn num_scalars(&self) -> usize {
        self.weights.iter().map(Array2::len).sum::<usize>() + self.biases.iter().map(Array1::len).sum::<usize>()
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(|w| w.iter().all(|v| v.is_finite()))
            && self.biases.iter().all(|b| b.iter().all(|v| v.is_finite()))
    }

    /// Flattens all weights then all biases, layer by layer.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_scalars());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend(w.iter());
            out.extend(b.iter());
        }
        out
    }

    pub fn from_flat(&self, flat: &[f64]) -> Self {
        let mut out = self.clone();
        let mut it = flat.iter().copied();
        for (w, b) in out.weights.iter_mut().zip(out.biases.iter_mut()) {
            w.iter_mut().for_each(|v| *v = it.next().expect("flat vector too short"));
            b.iter_mut().for_each(|v| *v = it.next().expect("flat vector too short"));
        }
        out
    }

    pub fn check_input(&self, num_features: usize, num_classes: usize) -> Result<()> {
        if self.num_features() != num_features || self.num_classes() != num_classes {
            return Err(Error::shape(
                "model (features, classes) vs dataset",
                format!("({}, {})", num_features, num_classes),
                format!("({}, {})", self.num_features(), self.num_classes()),
            ));
        }
        Ok(())
    }
}

/// Intermediate values of a sliced forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    /// `Ĥ^(2) .. Ĥ^(L)`.
    pub pre_activations: Vec<Array2<f64>>,
    /// `H^(1) .. H^(L-1)`; `H^(1)` is the input attribute block.
    pub post_activations: Vec<Array2<f64>>,
    /// Output row of the target node.
    pub logits: Array1<f64>,
}

impl ForwardTrace {
    /// `Ĥ^(l)` for `2 ≤ l ≤ L`.
    pub fn pre(&self, l: usize) -> &Array2<f64> {
        &self.pre_activations[l - 2]
    }

    pub fn predict(&self) -> usize {
        predict(self.logits.as_slice().unwrap())
    }
}

fn add_bias(mut m: Array2<f64>, b: &Array1<f64>) -> Array2<f64> {
    m += &b.view().insert_axis(Axis(0));
    m
}

/// Forward pass of the sliced network. `attrs_override` replaces the sliced
/// attribute block (e.g. with a perturbed one).
pub fn forward_sliced(
    sp: &SlicedProblem,
    params: &GcnParams,
    attrs_override: Option<&Array2<f64>>,
) -> Result<ForwardTrace> {
    let x = attrs_override.unwrap_or(&sp.sliced_attrs);
    if x.dim() != sp.sliced_attrs.dim() {
        return Err(Error::shape(
            "attribute block",
            format!("{:?}", sp.sliced_attrs.dim()),
            format!("{:?}", x.dim()),
        ));
    }
    if let Some(bad) = x.iter().find(|&&v| v != 0.0 && v != 1.0) {
        return Err(Error::Config(format!("attribute value {bad} is not binary")));
    }
    if params.layer_count() != sp.layer_count || params.num_features() != x.ncols() {
        return Err(Error::shape(
            "model (layers, features)",
            format!("({}, {})", sp.layer_count, x.ncols()),
            format!("({}, {})", params.layer_count(), params.num_features()),
        ));
    }
    let l_max = sp.layer_count;
    let mut post = vec![x.clone()];
    let mut pre = Vec::with_capacity(l_max - 1);
    for l in 1..l_max {
        let h = add_bias(sp.mp(l).dot(&post[l - 1]).dot(params.weight(l)), params.bias(l));
        if l + 1 < l_max {
            post.push(h.mapv(|v| v.max(0.0)));
        }
        pre.push(h);
    }
    let logits = pre.last().unwrap().row(0).to_owned();
    Ok(ForwardTrace {
        pre_activations: pre,
        post_activations: post,
        logits,
    })
}

/// Full-graph logits (`N × K`), using the sparse attribute rows of `graph`.
pub fn forward_full(graph: &Graph, mp: &MessagePassing, params: &GcnParams) -> Result<Array2<f64>> {
    params.check_input(graph.num_features(), graph.num_classes())?;
    let w1 = params.weight(1);
    let mut xw = Array2::zeros((graph.num_nodes(), w1.ncols()));
    for n in 0..graph.num_nodes() {
        let mut row = xw.row_mut(n);
        for &d in graph.attributes(n) {
            row += &w1.row(d);
        }
    }
    let mut h = add_bias(mp.layer(1).matmul(&xw), params.bias(1));
    for l in 2..params.layer_count() {
        h.mapv_inplace(|v| v.max(0.0));
        h = add_bias(mp.layer(l).matmul(&h).dot(params.weight(l)), params.bias(l));
    }
    Ok(h)
}

/// Argmax of the logits, ties toward the smaller class index.
pub fn predict(logits: &[f64]) -> usize {
    select::argmax(logits)
}

/// `−log softmax(logits)[label]`, max-shifted.
pub fn cross_entropy(logits: &[f64], label: usize) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = logits.iter().map(|v| (v - max).exp()).sum::<f64>().ln() + max;
    lse - logits[label]
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|v| (v - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct Checkpoint {
    #[serde(rename = "L")]
    layer_count: usize,
    dims: Vec<usize>,
    weights: Vec<Vec<f64>>,
    biases: Vec<Vec<f64>>,
}

impl GcnParams {
    /// Checkpoint JSON. Floats are written in shortest round-trip form, so
    /// loading restores the parameters bit for bit.
    pub fn to_json(&self) -> String {
        let ck = Checkpoint {
            layer_count: self.layer_count(),
            dims: self.dims.clone(),
            weights: self.weights.iter().map(|w| w.iter().copied().collect()).collect(),
            biases: self.biases.iter().map(|b| b.to_vec()).collect(),
        };
        serde_json::to_string(&ck).expect("checkpoint serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ck: Checkpoint = serde_json::from_str(text)?;
        if ck.layer_count != ck.dims.len() {
            return Err(Error::shape("checkpoint L vs dims", ck.layer_count, ck.dims.len()));
        }
        if ck.weights.len() + 1 != ck.dims.len() || ck.biases.len() + 1 != ck.dims.len() {
            return Err(Error::shape("checkpoint layers", ck.dims.len() - 1, ck.weights.len()));
        }
        let weights = ck
            .weights
            .into_iter()
            .enumerate()
            .map(|(l, w)| {
                let shape = (ck.dims[l], ck.dims[l + 1]);
                Array2::from_shape_vec(shape, w)
                    .map_err(|_| Error::shape(format!("W^({}) entries", l + 1), shape.0 * shape.1, "other"))
            })
            .collect::<Result<Vec<_>>>()?;
        let biases = ck.biases.into_iter().map(Array1::from).collect();
        GcnParams::new(ck.dims, weights, biases)
    }
}
