//! Standard and certifiably robust training.
//!
//! * `CE`: cross entropy of the exact logits on labeled nodes.
//! * `RCE`: cross entropy of the worst-case margin vector `p`.
//! * `RH`: robust hinge loss with margin `M1` plus exact cross entropy.
//! * `RH_U`: `RH` until convergence, then additionally the robust hinge loss
//!   with margin `M2` on unlabeled nodes, measured against their predicted
//!   class.
//!
//! The robust losses use the default envelope slopes and closed-form budget
//! multipliers of the dual, recomputed on every batch.

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bounds::{compute_bounds, Budget};
use crate::dual::{margin_vector, CertifyMode};
use crate::error::{Error, Result};
use crate::gcn::{self, GcnParams};
use crate::grad::network::{self, NetVars};
use crate::grad::{Tape, Var};
use crate::graph::{slice, Graph, MessagePassing, SplitTag};

/// `ln(0.9 / 0.1)`: hinge margin for labeled nodes.
pub fn default_margin_labeled() -> f64 {
    (0.9f64 / 0.1).ln()
}

/// `ln(0.6 / 0.4)`: hinge margin for unlabeled nodes.
pub fn default_margin_unlabeled() -> f64 {
    (0.6f64 / 0.4).ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TrainMode {
    Ce,
    Rce,
    Rh,
    RhU,
}

impl TrainMode {
    pub fn as_str(self) -> &'static str {
        match self {
            TrainMode::Ce => "CE",
            TrainMode::Rce => "RCE",
            TrainMode::Rh => "RH",
            TrainMode::RhU => "RH_U",
        }
    }
}

impl fmt::Display for TrainMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TrainMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "CE" => Ok(TrainMode::Ce),
            "RCE" => Ok(TrainMode::Rce),
            "RH" => Ok(TrainMode::Rh),
            "RH_U" => Ok(TrainMode::RhU),
            _ => Err(Error::Config(format!("unknown training mode `{s}` (expected CE, RCE, RH or RH_U)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub mode: TrainMode,
    /// Budget the robust losses certify against.
    pub budget: Budget,
    pub margin_labeled: f64,
    pub margin_unlabeled: f64,
    pub learning_rate: f64,
    pub l2_strength: f64,
    pub batch_size: usize,
    /// Dropout rate; only used when `dropout` is set, and only in the exact
    /// cross-entropy term.
    pub dropout_rate: f64,
    pub dropout: bool,
    /// Epoch cap per phase.
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
    pub hidden: usize,
    pub layer_count: usize,
    /// Compute mean worst-case margins for the log after every epoch.
    pub log_margins: bool,
}

impl TrainConfig {
    /// Defaults for a dataset with `num_features` attributes: `q = ⌈D/100⌉`,
    /// `Q = 12`.
    pub fn new(mode: TrainMode, num_features: usize) -> Self {
        TrainConfig {
            mode,
            budget: Budget::new(Budget::default_local(num_features), 12),
            margin_labeled: default_margin_labeled(),
            margin_unlabeled: default_margin_unlabeled(),
            learning_rate: 0.001,
            l2_strength: 1e-5,
            batch_size: 20,
            dropout_rate: 0.5,
            dropout: false,
            max_epochs: 1000,
            patience: 20,
            seed: 0,
            hidden: 32,
            layer_count: 3,
            log_margins: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.margin_labeled >= self.margin_unlabeled && self.margin_unlabeled >= 0.0) {
            return Err(Error::Config(format!(
                "margins must satisfy M1 >= M2 >= 0, got M1 = {}, M2 = {}",
                self.margin_labeled, self.margin_unlabeled
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::Config(format!("dropout_rate {} outside [0, 1)", self.dropout_rate)));
        }
        if self.layer_count < 2 {
            return Err(Error::Config("layer_count must be at least 2".into()));
        }
        if !(self.learning_rate > 0.0) || !(self.l2_strength >= 0.0) {
            return Err(Error::Config("learning_rate must be positive and l2_strength nonnegative".into()));
        }
        Ok(())
    }

    pub fn dims(&self, num_features: usize, num_classes: usize) -> Vec<usize> {
        let mut dims = vec![num_features];
        dims.extend(std::iter::repeat_n(self.hidden, self.layer_count - 2));
        dims.push(num_classes);
        dims
    }
}

/// `CE(p, y*)` with the margin vector used as logits.
pub fn robust_cross_entropy_loss(p: &[f64], y_star: usize) -> f64 {
    gcn::cross_entropy(p, y_star)
}

/// `Σ_{k≠y*} max(0, p_k + M)`.
pub fn robust_hinge_loss(p: &[f64], y_star: usize, margin: f64) -> f64 {
    p.iter()
        .enumerate()
        .filter(|&(k, _)| k != y_star)
        .map(|(_, &v)| (v + margin).max(0.0))
        .sum()
}

fn hinge_on_tape(tape: &mut Tape, p: &[Var], y: usize, margin: f64) -> Option<Var> {
    let terms: Vec<Var> = p
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != y)
        .map(|(_, &v)| {
            let s = tape.add_scalar(v, margin);
            tape.relu(s)
        })
        .collect();
    (!terms.is_empty()).then(|| tape.add_all(&terms))
}

/// Which per-node term a node contributes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NodeTerm {
    /// Exact cross entropy.
    CrossEntropy,
    /// Cross entropy of the margin vector.
    RobustCrossEntropy,
    /// Robust hinge with the given margin plus exact cross entropy.
    HingeAndCrossEntropy(f64),
    /// Robust hinge with the given margin w.r.t. the predicted class.
    PredictedHinge(f64),
}

/// Everything a per-node loss needs besides the parameters.
#[derive(Debug, Clone, Copy)]
pub struct LossContext<'a> {
    pub graph: &'a Graph,
    pub mp: &'a MessagePassing,
    pub budget: Budget,
    pub layer_count: usize,
}

/// Per-node loss on a tape. `label` is ignored for [`NodeTerm::PredictedHinge`].
pub fn node_loss_on_tape(
    tape: &mut Tape,
    net: &NetVars,
    ctx: &LossContext,
    node: usize,
    label: usize,
    term: NodeTerm,
    dropout: Option<&[Array2<f64>]>,
) -> Result<Var> {
    let sp = slice(ctx.graph, ctx.mp, node, ctx.layer_count)?;
    let exact_ce = |tape: &mut Tape| {
        let z = network::logits(tape, &sp, net, &sp.sliced_attrs, dropout);
        tape.cross_entropy(z, label)
    };
    Ok(match term {
        NodeTerm::CrossEntropy => exact_ce(tape),
        NodeTerm::RobustCrossEntropy => {
            let p = network::margin_vector_on_tape(tape, &sp, net, ctx.budget, label);
            let row = tape.concat(p);
            tape.cross_entropy(row, label)
        }
        NodeTerm::HingeAndCrossEntropy(m) => {
            let p = network::margin_vector_on_tape(tape, &sp, net, ctx.budget, label);
            let ce = exact_ce(tape);
            match hinge_on_tape(tape, &p, label, m) {
                Some(h) => tape.add(h, ce),
                None => ce,
            }
        }
        NodeTerm::PredictedHinge(m) => {
            let predicted = gcn::forward_sliced(&sp, net.params, None)?.predict();
            tape.note_decision(&predicted);
            let p = network::margin_vector_on_tape(tape, &sp, net, ctx.budget, predicted);
            match hinge_on_tape(tape, &p, predicted, m) {
                Some(h) => h,
                None => tape.scalar(0.0),
            }
        }
    })
}

/// `λ/2 Σ w²` over the weights (biases are not regularized) and its gradient.
pub fn l2_penalty(params: &GcnParams, strength: f64) -> (f64, GcnParams) {
    let mut grad = GcnParams::zeros(params.dims().to_vec());
    let mut value = 0.0;
    for (g, w) in grad.weights.iter_mut().zip(&params.weights) {
        value += 0.5 * strength * w.iter().map(|v| v * v).sum::<f64>();
        *g = w * strength;
    }
    (value, grad)
}

fn add_into(acc: &mut GcnParams, other: &GcnParams) {
    for (a, b) in acc.weights.iter_mut().zip(&other.weights) {
        *a += b;
    }
    for (a, b) in acc.biases.iter_mut().zip(&other.biases) {
        *a += b;
    }
}

/// One node of a batch with its term and optional dropout masks.
#[derive(Debug, Clone)]
pub struct BatchItem {
    pub node: usize,
    pub label: usize,
    pub term: NodeTerm,
    pub dropout: Option<Vec<Array2<f64>>>,
}

/// `Σ_t loss_t + λ/2 Σ w²` and its gradient; nodes are processed in
/// parallel and their gradients summed in batch order.
pub fn batch_loss(ctx: &LossContext, params: &GcnParams, items: &[BatchItem], l2_strength: f64) -> Result<(f64, GcnParams)> {
    let per_node: Vec<Result<(f64, GcnParams)>> = items
        .par_iter()
        .map(|item| {
            network::gradient(params, |tape, net| {
                node_loss_on_tape(tape, net, ctx, item.node, item.label, item.term, item.dropout.as_deref())
            })
        })
        .collect();
    let (mut value, mut grad) = l2_penalty(params, l2_strength);
    for r in per_node {
        let (v, g) = r?;
        value += v;
        add_into(&mut grad, &g);
    }
    Ok((value, grad))
}

fn items_for(nodes: &[usize], graph: &Graph, term: NodeTerm) -> Result<Vec<BatchItem>> {
    nodes
        .iter()
        .map(|&n| {
            let label = match term {
                NodeTerm::PredictedHinge(_) => 0,
                _ => graph
                    .label(n)
                    .ok_or_else(|| Error::Config(format!("node {n} has no label")))?,
            };
            Ok(BatchItem {
                node: n,
                label,
                term,
                dropout: None,
            })
        })
        .collect()
}

/// Robust hinge with margin `M1` plus cross entropy over a labeled batch,
/// plus the L2 penalty.
pub fn combined_loss(ctx: &LossContext, params: &GcnParams, batch: &[usize], config: &TrainConfig) -> Result<(f64, GcnParams)> {
    let items = items_for(batch, ctx.graph, NodeTerm::HingeAndCrossEntropy(config.margin_labeled))?;
    batch_loss(ctx, params, &items, config.l2_strength)
}

/// [`combined_loss`] on `labeled` plus the robust hinge with margin `M2`
/// on `unlabeled`, each measured against its current prediction.
pub fn semi_supervised_loss(
    ctx: &LossContext,
    params: &GcnParams,
    labeled: &[usize],
    unlabeled: &[usize],
    config: &TrainConfig,
) -> Result<(f64, GcnParams)> {
    let mut items = items_for(labeled, ctx.graph, NodeTerm::HingeAndCrossEntropy(config.margin_labeled))?;
    items.extend(items_for(unlabeled, ctx.graph, NodeTerm::PredictedHinge(config.margin_unlabeled))?);
    batch_loss(ctx, params, &items, config.l2_strength)
}

/// Adam with bias correction.
#[derive(Debug, Clone)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(learning_rate: f64, num_scalars: usize) -> Self {
        Adam {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            m: vec![0.0; num_scalars],
            v: vec![0.0; num_scalars],
        }
    }

    pub fn step(&mut self, params: &mut GcnParams, grad: &GcnParams) {
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        let mut flat = params.to_flat();
        for (i, g) in grad.to_flat().into_iter().enumerate() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            flat[i] -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
        }
        *params = params.from_flat(&flat);
    }
}

/// One row of the training log.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub phase: usize,
    pub loss: f64,
    pub mean_worst_case_margin_labeled: f64,
    pub mean_worst_case_margin_unlabeled: f64,
    pub train_acc: f64,
    pub test_acc: f64,
}

pub const LOG_HEADER: &str =
    "epoch,phase,loss,mean_worst_case_margin_labeled,mean_worst_case_margin_unlabeled,train_acc,test_acc";

impl EpochLog {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.epoch,
            self.phase,
            self.loss,
            self.mean_worst_case_margin_labeled,
            self.mean_worst_case_margin_unlabeled,
            self.train_acc,
            self.test_acc
        )
    }
}

pub fn log_csv(log: &[EpochLog]) -> String {
    let mut out = String::from(LOG_HEADER);
    out.push('\n');
    for row in log {
        out.push_str(&row.csv_row());
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone)]
pub struct TrainResult {
    pub params: GcnParams,
    pub log: Vec<EpochLog>,
}

/// Fraction of `nodes` whose prediction matches the label (NaN if none).
pub fn accuracy(graph: &Graph, logits: &Array2<f64>, nodes: &[usize]) -> f64 {
    let labeled: Vec<usize> = nodes.iter().copied().filter(|&n| graph.label(n).is_some()).collect();
    if labeled.is_empty() {
        return f64::NAN;
    }
    let hits = labeled
        .iter()
        .filter(|&&n| gcn::predict(logits.row(n).as_slice().unwrap()) == graph.label(n).unwrap())
        .count();
    hits as f64 / labeled.len() as f64
}

/// Mean over `nodes` of the default-Ω worst-case margin, measured against
/// the label (`use_labels`) or the prediction.
pub fn mean_worst_case_margin(
    ctx: &LossContext,
    params: &GcnParams,
    nodes: &[usize],
    use_labels: bool,
) -> Result<f64> {
    if nodes.is_empty() {
        return Ok(f64::NAN);
    }
    let margins: Vec<Result<f64>> = nodes
        .par_iter()
        .map(|&n| {
            let sp = slice(ctx.graph, ctx.mp, n, ctx.layer_count)?;
            let class = match (use_labels, ctx.graph.label(n)) {
                (true, Some(y)) => y,
                _ => gcn::forward_sliced(&sp, params, None)?.predict(),
            };
            let bounds = compute_bounds(&sp, params, ctx.budget);
            Ok(margin_vector(&sp, params, &bounds, class, CertifyMode::Default).worst_case_margin())
        })
        .collect();
    let mut total = 0.0;
    for m in margins {
        total += m?;
    }
    Ok(total / nodes.len() as f64)
}

fn dropout_masks(rng: &mut ChaCha8Rng, ctx: &LossContext, node: usize, dims: &[usize], rate: f64) -> Result<Vec<Array2<f64>>> {
    let sp = slice(ctx.graph, ctx.mp, node, ctx.layer_count)?;
    let keep = 1.0 / (1.0 - rate);
    Ok((1..ctx.layer_count)
        .map(|l| {
            let rows = sp.mp(l).ncols();
            Array2::from_shape_fn((rows, dims[l - 1]), |_| if rng.gen_bool(rate) { 0.0 } else { keep })
        })
        .collect())
}

/// Trains a GCN on `graph` according to `config`. Returns
/// [`Error::Diverged`] with the last finite parameters if the loss stops
/// being finite.
pub fn train(graph: &Graph, config: &TrainConfig) -> Result<TrainResult> {
    config.validate()?;
    let labeled = graph.nodes_with_split(SplitTag::Labeled);
    if labeled.is_empty() {
        return Err(Error::Config("no labeled nodes to train on".into()));
    }
    if let Some(&n) = labeled.iter().find(|&&n| graph.label(n).is_none()) {
        return Err(Error::Config(format!("labeled node {n} has no label")));
    }
    let unlabeled: Vec<usize> = (0..graph.num_nodes()).filter(|&n| graph.split(n) != Some(SplitTag::Labeled)).collect();
    let dims = config.dims(graph.num_features(), graph.num_classes());
    let mut params = GcnParams::glorot(dims.clone(), config.seed);
    let mp = MessagePassing::gcn(graph);
    let ctx = LossContext {
        graph,
        mp: &mp,
        budget: config.budget,
        layer_count: config.layer_count,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(0x5eed));
    let mut adam = Adam::new(config.learning_rate, params.num_scalars());
    let mut log = Vec::new();
    let phases: &[usize] = if config.mode == TrainMode::RhU { &[1, 2] } else { &[1] };
    let mut epoch = 0;
    for &phase in phases {
        let pool: Vec<usize> = if phase == 1 { labeled.clone() } else { (0..graph.num_nodes()).collect() };
        let mut best = f64::INFINITY;
        let mut since_best = 0;
        for _ in 0..config.max_epochs {
            epoch += 1;
            let mut order = pool.clone();
            order.shuffle(&mut rng);
            let mut epoch_loss = 0.0;
            let last_finite = params.clone();
            for batch in order.chunks(config.batch_size) {
                let mut items = Vec::with_capacity(batch.len());
                for &n in batch {
                    let labeled_node = graph.split(n) == Some(SplitTag::Labeled);
                    let term = match (config.mode, labeled_node) {
                        (TrainMode::Ce, _) => NodeTerm::CrossEntropy,
                        (TrainMode::Rce, _) => NodeTerm::RobustCrossEntropy,
                        (_, true) => NodeTerm::HingeAndCrossEntropy(config.margin_labeled),
                        (_, false) => NodeTerm::PredictedHinge(config.margin_unlabeled),
                    };
                    let uses_ce = matches!(term, NodeTerm::CrossEntropy | NodeTerm::HingeAndCrossEntropy(_));
                    let dropout = if config.dropout && uses_ce {
                        Some(dropout_masks(&mut rng, &ctx, n, &dims, config.dropout_rate)?)
                    } else {
                        None
                    };
                    items.push(BatchItem {
                        node: n,
                        label: graph.label(n).unwrap_or(0),
                        term,
                        dropout,
                    });
                }
                let diverged = || Error::Diverged {
                    epoch,
                    last_finite: Box::new(last_finite.clone()),
                };
                let (value, grad) = match batch_loss(&ctx, &params, &items, config.l2_strength) {
                    Ok(r) => r,
                    Err(Error::NonFinite(_)) => return Err(diverged()),
                    Err(e) => return Err(e),
                };
                if !value.is_finite() {
                    return Err(diverged());
                }
                epoch_loss += value;
                adam.step(&mut params, &grad);
                if !params.is_finite() {
                    return Err(diverged());
                }
            }
            let logits = gcn::forward_full(graph, &mp, &params)?;
            let (margin_l, margin_u) = if config.log_margins {
                (
                    mean_worst_case_margin(&ctx, &params, &labeled, true)?,
                    mean_worst_case_margin(&ctx, &params, &unlabeled, false)?,
                )
            } else {
                (f64::NAN, f64::NAN)
            };
            log.push(EpochLog {
                epoch,
                phase,
                loss: epoch_loss,
                mean_worst_case_margin_labeled: margin_l,
                mean_worst_case_margin_unlabeled: margin_u,
                train_acc: accuracy(graph, &logits, &labeled),
                test_acc: accuracy(graph, &logits, &unlabeled),
            });
            if epoch_loss < best - 1e-12 {
                best = epoch_loss;
                since_best = 0;
            } else {
                since_best += 1;
                if since_best >= config.patience {
                    break;
                }
            }
        }
    }
    Ok(TrainResult { params, log })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn margin_constants_are_log_odds() {
        assert!((default_margin_labeled() - 2.197_225).abs() < 1e-6);
        assert!((default_margin_unlabeled() - 0.405_465).abs() < 1e-6);
    }

    #[test]
    fn robust_cross_entropy_examples() {
        assert!(robust_cross_entropy_loss(&[0.0, -50.0], 0) < 1e-20);
        assert!((robust_cross_entropy_loss(&[0.0, 0.0], 0) - std::f64::consts::LN_2).abs() < 1e-12);
        assert!((robust_cross_entropy_loss(&[0.0, 2.0], 0) - 2.126_928).abs() < 1e-6);
    }

    #[test]
    fn robust_hinge_examples() {
        assert_eq!(robust_hinge_loss(&[0.0, -5.0], 0, 2.0), 0.0);
        assert_eq!(robust_hinge_loss(&[0.0, -1.0], 0, 2.0), 1.0);
        assert_eq!(robust_hinge_loss(&[0.0, 3.0, -3.0], 0, 2.0), 5.0);
        let m2 = default_margin_unlabeled();
        assert!((robust_hinge_loss(&[0.0, -0.1], 0, m2) - 0.305_465).abs() < 1e-6);
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("rh_u".parse::<TrainMode>().unwrap(), TrainMode::RhU);
        assert_eq!("RH-U".parse::<TrainMode>().unwrap(), TrainMode::RhU);
        assert!("hinge".parse::<TrainMode>().is_err());
    }

    #[test]
    fn default_config_values() {
        let c = TrainConfig::new(TrainMode::RhU, 2879);
        assert_eq!(c.budget, Budget::new(29, 12));
        assert_eq!(c.learning_rate, 0.001);
        assert_eq!(c.l2_strength, 1e-5);
        assert_eq!(c.batch_size, 20);
        assert_eq!(c.dropout_rate, 0.5);
        assert!(!c.dropout);
        assert_eq!(c.dims(2879, 7), vec![2879, 32, 7]);
        assert!(c.validate().is_ok());
        let bad = TrainConfig { margin_unlabeled: 3.0, ..c };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn zero_gradient_step_only_applies_decay() {
        let mut p = GcnParams::glorot(vec![3, 2, 2], 4);
        let before = p.clone();
        let mut adam = Adam::new(0.001, p.num_scalars());
        adam.step(&mut p, &GcnParams::zeros(vec![3, 2, 2]));
        assert_eq!(p, before);
        let (_, decay) = l2_penalty(&p, 1e-5);
        adam.step(&mut p, &decay);
        for (a, b) in p.weights[0].iter().zip(before.weights[0].iter()) {
            assert!(a.abs() <= b.abs());
        }
        assert_eq!(p.biases, before.biases);
    }

    #[test]
    fn l2_penalty_skips_biases() {
        let mut p = GcnParams::zeros(vec![1, 1, 2]);
        p.weights[0][[0, 0]] = 2.0;
        p.biases[0][0] = 5.0;
        let (v, g) = l2_penalty(&p, 0.1);
        assert!((v - 0.2).abs() < 1e-15);
        assert_eq!(g.weights[0][[0, 0]], 0.2);
        assert_eq!(g.biases[0][0], 0.0);
    }
}
