//! Certification of many nodes and robustness curves over the global budget.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::bounds::Budget;
use crate::dual::{certify, Certificate, CertifyMode, Status};
use crate::error::Result;
use crate::gcn::{self, GcnParams};
use crate::graph::{slice, Graph, MessagePassing, SlicedProblem, SplitTag};

/// Class a node is certified for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LabelSource {
    /// The model's prediction.
    #[default]
    Predicted,
    /// The ground-truth label where one exists, else the prediction.
    GroundTruth,
}

pub fn certify_node(
    graph: &Graph,
    mp: &MessagePassing,
    params: &GcnParams,
    node: usize,
    budget: Budget,
    mode: CertifyMode,
    labels: LabelSource,
) -> Result<(SlicedProblem, Certificate)> {
    let sp = slice(graph, mp, node, params.layer_count())?;
    let y_star = match (labels, graph.label(node)) {
        (LabelSource::GroundTruth, Some(y)) => y,
        _ => gcn::forward_sliced(&sp, params, None)?.predict(),
    };
    let cert = certify(&sp, params, budget, y_star, mode)?;
    Ok((sp, cert))
}

/// Certificates for `nodes`, in order. Nodes are processed in parallel.
pub fn certify_nodes(
    graph: &Graph,
    mp: &MessagePassing,
    params: &GcnParams,
    nodes: &[usize],
    budget: Budget,
    mode: CertifyMode,
    labels: LabelSource,
) -> Result<Vec<Certificate>> {
    params.check_input(graph.num_features(), graph.num_classes())?;
    nodes
        .par_iter()
        .map(|&n| certify_node(graph, mp, params, n, budget, mode, labels).map(|(_, c)| c))
        .collect()
}

/// Status counts of a set of certificates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StatusCounts {
    pub robust: usize,
    pub non_robust: usize,
    pub undecided: usize,
}

impl StatusCounts {
    pub fn of<'a>(certs: impl IntoIterator<Item = &'a Certificate>) -> Self {
        let mut c = StatusCounts::default();
        for cert in certs {
            match cert.status {
                Status::Robust => c.robust += 1,
                Status::NonRobust => c.non_robust += 1,
                Status::Undecided => c.undecided += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.robust + self.non_robust + self.undecided
    }

    /// `(robust, non_robust, undecided)` fractions; all zero for an empty set.
    pub fn fractions(&self) -> (f64, f64, f64) {
        let t = self.total();
        if t == 0 {
            return (0.0, 0.0, 0.0);
        }
        let t = t as f64;
        (self.robust as f64 / t, self.non_robust as f64 / t, self.undecided as f64 / t)
    }
}

/// One row of a certification curve.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub global: usize,
    /// `labeled`, `unlabeled` or `all`.
    pub split: &'static str,
    pub nodes: usize,
    pub fraction_certified_robust: f64,
    pub fraction_certified_nonrobust: f64,
    pub fraction_undecided: f64,
}

/// Certifies every node for `Q = 0..=q_max` and summarizes per split tag.
pub fn certification_curve(
    graph: &Graph,
    mp: &MessagePassing,
    params: &GcnParams,
    local: usize,
    q_max: usize,
    mode: CertifyMode,
    labels: LabelSource,
) -> Result<Vec<CurveRow>> {
    let all: Vec<usize> = (0..graph.num_nodes()).collect();
    let mut groups: Vec<(&'static str, Vec<usize>)> = Vec::new();
    for tag in [SplitTag::Labeled, SplitTag::Unlabeled] {
        let members = graph.nodes_with_split(tag);
        if !members.is_empty() {
            groups.push((tag.as_str(), members));
        }
    }
    groups.push(("all", all.clone()));
    let mut rows = Vec::new();
    for global in 0..=q_max {
        let certs = certify_nodes(graph, mp, params, &all, Budget::new(local, global), mode, labels)?;
        for (name, members) in &groups {
            let counts = StatusCounts::of(members.iter().map(|&n| &certs[n]));
            let (r, nr, u) = counts.fractions();
            rows.push(CurveRow {
                global,
                split: name,
                nodes: members.len(),
                fraction_certified_robust: r,
                fraction_certified_nonrobust: nr,
                fraction_undecided: u,
            });
        }
    }
    Ok(rows)
}

pub const CURVE_HEADER: &str = "Q,split,nodes,fraction_certified_robust,fraction_certified_nonrobust,fraction_undecided";

pub fn curve_csv(rows: &[CurveRow]) -> String {
    let mut out = String::from(CURVE_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.global, r.split, r.nodes, r.fraction_certified_robust, r.fraction_certified_nonrobust, r.fraction_undecided
        );
    }
    out
}
