//! Reverse-mode differentiation over dense matrices.
//!
//! A [`Tape`] records matrix-valued primitives together with their forward
//! values. Non-smooth primitives (ReLU, negative part, gathers built from
//! top-k selections) keep the case split observed in the forward pass, so the
//! backward pass returns the gradient of the active linear piece. Every such
//! decision also feeds [`Tape::signature`], which lets finite-difference
//! checks detect when a perturbation crosses a kink.

pub mod check;
pub mod network;

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use ndarray::{Array2, Axis};

use crate::error::{Error, Result};

/// Handle to a recorded value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

/// One output entry of a [`Op::Gather`]: `out[out_idx] += coef * in[in_idx]`
/// (flat row-major indices).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GatherEntry {
    pub out_idx: usize,
    pub in_idx: usize,
    pub coef: f64,
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Transpose(Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    AddScalar(Var, f64),
    /// Adds a `1 × c` row to every row of an `r × c` matrix.
    AddRow(Var, Var),
    Relu(Var),
    /// `max(−x, 0)`.
    NegPart(Var),
    /// `a / b` where `mask` is set, zero elsewhere.
    DivMasked(Var, Var, Array2<bool>),
    Sum(Var),
    Gather {
        input: Var,
        entries: Vec<GatherEntry>,
    },
    /// Concatenates `1 × 1` values into a `1 × n` row.
    Concat(Vec<Var>),
    /// Cross entropy of a `1 × K` logit row.
    CrossEntropy(Var, usize),
}

#[derive(Debug, Clone)]
struct Node {
    op: Op,
    value: Array2<f64>,
    requires_grad: bool,
}

#[derive(Debug, Default, Clone)]
pub struct Tape {
    nodes: Vec<Node>,
    decisions: Vec<u64>,
}

fn shape_of(m: &Array2<f64>) -> (usize, usize) {
    m.dim()
}

fn hash_of<T: Hash>(v: &T) -> u64 {
    let mut h = DefaultHasher::new();
    v.hash(&mut h);
    h.finish()
}

fn sign_pattern(m: &Array2<f64>) -> u64 {
    let bits: Vec<i8> = m
        .iter()
        .map(|&v| if v > 0.0 { 1 } else if v < 0.0 { -1 } else { 0 })
        .collect();
    hash_of(&bits)
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, op: Op, value: Array2<f64>, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            op,
            value,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    /// Differentiable input.
    pub fn param(&mut self, value: Array2<f64>) -> Var {
        self.push(Op::Leaf, value, true)
    }

    /// Constant input.
    pub fn constant(&mut self, value: Array2<f64>) -> Var {
        self.push(Op::Leaf, value, false)
    }

    pub fn scalar(&mut self, v: f64) -> Var {
        self.constant(Array2::from_elem((1, 1), v))
    }

    /// Constant whose value encodes a discrete choice (e.g. a partition mask);
    /// it contributes to the signature.
    pub fn mask(&mut self, value: Array2<f64>) -> Var {
        self.decisions.push(sign_pattern(&value));
        self.constant(value)
    }

    /// Records an externally made discrete decision in the signature.
    pub fn note_decision<T: Hash>(&mut self, decision: &T) {
        self.decisions.push(hash_of(decision));
    }

    pub fn value(&self, v: Var) -> &Array2<f64> {
        &self.nodes[v.0].value
    }

    pub fn scalar_value(&self, v: Var) -> f64 {
        let m = self.value(v);
        debug_assert_eq!(m.dim(), (1, 1));
        m[[0, 0]]
    }

    fn rg(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    fn record(&mut self, op: Op) -> Var {
        let value = self.eval(&op);
        let requires_grad = self.inputs(&op).iter().any(|&v| self.rg(v));
        match &op {
            Op::Relu(a) | Op::NegPart(a) => {
                let s = sign_pattern(self.value(*a));
                self.decisions.push(s);
            }
            Op::DivMasked(_, _, mask) => {
                let h = hash_of(&mask.iter().copied().collect::<Vec<bool>>());
                self.decisions.push(h);
            }
            Op::Gather { entries, .. } => {
                let idx: Vec<(usize, usize)> = entries.iter().map(|e| (e.out_idx, e.in_idx)).collect();
                self.decisions.push(hash_of(&idx));
            }
            _ => {}
        }
        self.push(op, value, requires_grad)
    }

    fn inputs(&self, op: &Op) -> Vec<Var> {
        match op {
            Op::Leaf => vec![],
            Op::MatMul(a, b) | Op::Add(a, b) | Op::Sub(a, b) | Op::Mul(a, b) | Op::AddRow(a, b) => {
                vec![*a, *b]
            }
            Op::DivMasked(a, b, _) => vec![*a, *b],
            Op::Transpose(a)
            | Op::Scale(a, _)
            | Op::AddScalar(a, _)
            | Op::Relu(a)
            | Op::NegPart(a)
            | Op::Sum(a)
            | Op::CrossEntropy(a, _) => vec![*a],
            Op::Gather { input, .. } => vec![*input],
            Op::Concat(vs) => vs.clone(),
        }
    }

    fn eval(&self, op: &Op) -> Array2<f64> {
        let v = |x: &Var| &self.nodes[x.0].value;
        match op {
            Op::Leaf => unreachable!("leaves carry their value"),
            Op::MatMul(a, b) => v(a).dot(v(b)),
            Op::Transpose(a) => v(a).t().to_owned(),
            Op::Add(a, b) => v(a) + v(b),
            Op::Sub(a, b) => v(a) - v(b),
            Op::Mul(a, b) => v(a) * v(b),
            Op::Scale(a, s) => v(a) * *s,
            Op::AddScalar(a, s) => v(a) + *s,
            Op::AddRow(a, b) => v(a) + v(b),
            Op::Relu(a) => v(a).mapv(|x| x.max(0.0)),
            Op::NegPart(a) => v(a).mapv(|x| (-x).max(0.0)),
            Op::DivMasked(a, b, mask) => {
                let mut out = Array2::zeros(shape_of(v(a)));
                ndarray::Zip::from(&mut out)
                    .and(v(a))
                    .and(v(b))
                    .and(mask)
                    .for_each(|o, &x, &y, &m| {
                        if m {
                            *o = x / y;
                        }
                    });
                out
            }
            Op::Sum(a) => Array2::from_elem((1, 1), v(a).sum()),
            Op::Gather { input, entries } => {
                let _ = input;
                unreachable!("gather values are produced by Tape::gather, {} entries", entries.len())
            }
            Op::Concat(vs) => {
                let row: Vec<f64> = vs.iter().map(|x| v(x)[[0, 0]]).collect();
                Array2::from_shape_vec((1, row.len()), row).unwrap()
            }
            Op::CrossEntropy(a, label) => {
                let logits = v(a);
                let row: Vec<f64> = logits.iter().copied().collect();
                Array2::from_elem((1, 1), crate::gcn::cross_entropy(&row, *label))
            }
        }
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        self.record(Op::MatMul(a, b))
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        self.record(Op::Transpose(a))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        self.record(Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        self.record(Op::Sub(a, b))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        self.record(Op::Mul(a, b))
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        self.record(Op::Scale(a, s))
    }

    pub fn add_scalar(&mut self, a: Var, s: f64) -> Var {
        self.record(Op::AddScalar(a, s))
    }

    pub fn add_row(&mut self, a: Var, row: Var) -> Var {
        assert_eq!(self.value(row).nrows(), 1, "add_row expects a 1 x c row");
        self.record(Op::AddRow(a, row))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        self.record(Op::Relu(a))
    }

    pub fn neg_part(&mut self, a: Var) -> Var {
        self.record(Op::NegPart(a))
    }

    pub fn div_masked(&mut self, a: Var, b: Var, mask: Array2<bool>) -> Var {
        self.record(Op::DivMasked(a, b, mask))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        self.record(Op::Sum(a))
    }

    pub fn concat(&mut self, scalars: Vec<Var>) -> Var {
        self.record(Op::Concat(scalars))
    }

    pub fn cross_entropy(&mut self, logits: Var, label: usize) -> Var {
        self.record(Op::CrossEntropy(logits, label))
    }

    /// Sparse linear map: `out[e.out_idx] += e.coef * input[e.in_idx]` for
    /// every entry, with `out` of shape `shape`.
    pub fn gather(&mut self, input: Var, shape: (usize, usize), entries: Vec<GatherEntry>) -> Var {
        let src = self.value(input);
        let mut out = Array2::zeros(shape);
        {
            let flat_in = src.as_slice().expect("tape values are contiguous");
            let flat_out = out.as_slice_mut().unwrap();
            for e in &entries {
                flat_out[e.out_idx] += e.coef * flat_in[e.in_idx];
            }
        }
        let op = Op::Gather { input, entries };
        let idx: Vec<(usize, usize)> = match &op {
            Op::Gather { entries, .. } => entries.iter().map(|e| (e.out_idx, e.in_idx)).collect(),
            _ => unreachable!(),
        };
        self.decisions.push(hash_of(&idx));
        let rg = self.rg(input);
        self.push(op, out, rg)
    }

    /// Sum of many values.
    pub fn add_all(&mut self, vars: &[Var]) -> Var {
        let mut acc = vars[0];
        for &v in &vars[1..] {
            acc = self.add(acc, v);
        }
        acc
    }

    /// Hash of every discrete decision recorded so far.
    pub fn signature(&self) -> u64 {
        hash_of(&self.decisions)
    }

    /// Recomputes every non-leaf value from the leaves and reports whether
    /// all recorded values are reproduced bit for bit.
    pub fn replay_matches(&self) -> bool {
        let mut replay = Tape {
            nodes: Vec::with_capacity(self.nodes.len()),
            decisions: Vec::new(),
        };
        for node in &self.nodes {
            let value = match &node.op {
                Op::Leaf => node.value.clone(),
                Op::Gather { input, entries } => {
                    let src = &replay.nodes[input.0].value;
                    let mut out = Array2::zeros(node.value.dim());
                    let flat_in = src.as_slice().unwrap();
                    let flat_out = out.as_slice_mut().unwrap();
                    for e in entries {
                        flat_out[e.out_idx] += e.coef * flat_in[e.in_idx];
                    }
                    out
                }
                op => replay.eval(op),
            };
            let same = value.len() == node.value.len()
                && value.iter().zip(node.value.iter()).all(|(a, b)| a.to_bits() == b.to_bits());
            if !same {
                return false;
            }
            replay.nodes.push(Node {
                op: node.op.clone(),
                value,
                requires_grad: node.requires_grad,
            });
        }
        true
    }

    /// Gradients of the scalar `loss` with respect to every recorded value.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        let lv = self.value(loss);
        if lv.dim() != (1, 1) {
            return Err(Error::shape("loss", "1x1", format!("{:?}", lv.dim())));
        }
        if let Some(i) = self.nodes[..=loss.0]
            .iter()
            .position(|n| n.value.iter().any(|v| !v.is_finite()))
        {
            return Err(Error::NonFinite(format!("tape value #{i}")));
        }
        let mut grads: Vec<Option<Array2<f64>>> = vec![None; loss.0 + 1];
        grads[loss.0] = Some(Array2::ones((1, 1)));
        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            if !node.requires_grad {
                continue;
            }
            let acc = |v: Var, delta: Array2<f64>, grads: &mut Vec<Option<Array2<f64>>>| {
                if !self.rg(v) {
                    return;
                }
                match &mut grads[v.0] {
                    Some(existing) => *existing += &delta,
                    slot => *slot = Some(delta),
                }
            };
            let val = |v: &Var| &self.nodes[v.0].value;
            match &node.op {
                Op::Leaf => {
                    grads[i] = Some(g);
                    continue;
                }
                Op::MatMul(a, b) => {
                    if self.rg(*a) {
                        acc(*a, g.dot(&val(b).t()), &mut grads);
                    }
                    if self.rg(*b) {
                        acc(*b, val(a).t().dot(&g), &mut grads);
                    }
                }
                Op::Transpose(a) => acc(*a, g.t().to_owned(), &mut grads),
                Op::Add(a, b) => {
                    acc(*a, g.clone(), &mut grads);
                    acc(*b, g, &mut grads);
                }
                Op::Sub(a, b) => {
                    acc(*a, g.clone(), &mut grads);
                    acc(*b, -g, &mut grads);
                }
                Op::Mul(a, b) => {
                    if self.rg(*a) {
                        acc(*a, &g * val(b), &mut grads);
                    }
                    if self.rg(*b) {
                        acc(*b, &g * val(a), &mut grads);
                    }
                }
                Op::Scale(a, s) => acc(*a, g * *s, &mut grads),
                Op::AddScalar(a, _) => acc(*a, g, &mut grads),
                Op::AddRow(a, b) => {
                    let row = g.sum_axis(Axis(0)).insert_axis(Axis(0));
                    acc(*a, g, &mut grads);
                    acc(*b, row, &mut grads);
                }
                Op::Relu(a) => {
                    let mut d = g;
                    ndarray::Zip::from(&mut d).and(val(a)).for_each(|d, &x| {
                        if x <= 0.0 {
                            *d = 0.0;
                        }
                    });
                    acc(*a, d, &mut grads);
                }
                Op::NegPart(a) => {
                    let mut d = g;
                    ndarray::Zip::from(&mut d).and(val(a)).for_each(|d, &x| {
                        *d = if x < 0.0 { -*d } else { 0.0 };
                    });
                    acc(*a, d, &mut grads);
                }
                Op::DivMasked(a, b, mask) => {
                    let (x, y) = (val(a), val(b));
                    let mut da = Array2::zeros(g.dim());
                    let mut db = Array2::zeros(g.dim());
                    ndarray::Zip::from(&mut da)
                        .and(&mut db)
                        .and(&g)
                        .and(x)
                        .and(y)
                        .and(mask)
                        .for_each(|da, db, &g, &x, &y, &m| {
                            if m {
                                *da = g / y;
                                *db = -g * x / (y * y);
                            }
                        });
                    acc(*a, da, &mut grads);
                    acc(*b, db, &mut grads);
                }
                Op::Sum(a) => {
                    let s = g[[0, 0]];
                    acc(*a, Array2::from_elem(val(a).dim(), s), &mut grads);
                }
                Op::Gather { input, entries } => {
                    let mut d = Array2::zeros(val(input).dim());
                    {
                        let flat_g = g.as_slice().unwrap();
                        let flat_d = d.as_slice_mut().unwrap();
                        for e in entries {
                            flat_d[e.in_idx] += e.coef * flat_g[e.out_idx];
                        }
                    }
                    acc(*input, d, &mut grads);
                }
                Op::Concat(vs) => {
                    for (k, v) in vs.iter().enumerate() {
                        acc(*v, Array2::from_elem((1, 1), g[[0, k]]), &mut grads);
                    }
                }
                Op::CrossEntropy(a, label) => {
                    let row: Vec<f64> = val(a).iter().copied().collect();
                    let mut p = crate::gcn::softmax(&row);
                    p[*label] -= 1.0;
                    let s = g[[0, 0]];
                    let d = Array2::from_shape_vec(val(a).dim(), p.into_iter().map(|v| v * s).collect())
                        .unwrap();
                    acc(*a, d, &mut grads);
                }
            }
        }
        Ok(Gradients { grads })
    }
}

/// Output of [`Tape::backward`].
#[derive(Debug, Clone)]
pub struct Gradients {
    grads: Vec<Option<Array2<f64>>>,
}

impl Gradients {
    /// Gradient with respect to `v`, or `None` if the loss does not depend on it.
    pub fn get(&self, v: Var) -> Option<&Array2<f64>> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }

    pub fn get_or_zero(&self, v: Var, shape: (usize, usize)) -> Array2<f64> {
        self.get(v).cloned().unwrap_or_else(|| Array2::zeros(shape))
    }
}
