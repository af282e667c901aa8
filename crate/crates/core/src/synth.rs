//! Seeded planted-partition graphs with class-correlated binary attributes.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{Graph, SplitTag};

/// Nodes are split evenly into classes. Edges appear with probability
/// `p_in` inside a class and `p_out` across classes. Feature `d` belongs to
/// class `d mod K`; a node sets it with probability `attr_in` if it belongs
/// to its own class and `attr_out` otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantedPartition {
    pub nodes: usize,
    pub classes: usize,
    pub features: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub attr_in: f64,
    pub attr_out: f64,
    pub labeled_fraction: f64,
    pub seed: u64,
}

impl Default for PlantedPartition {
    fn default() -> Self {
        PlantedPartition {
            nodes: 100,
            classes: 2,
            features: 20,
            p_in: 0.08,
            p_out: 0.008,
            attr_in: 0.1,
            attr_out: 0.02,
            labeled_fraction: 0.1,
            seed: 0,
        }
    }
}

impl PlantedPartition {
    pub fn generate(&self) -> Result<Graph> {
        if self.classes == 0 || self.nodes < self.classes {
            return Err(Error::Config(format!(
                "planted partition needs at least one node per class ({} nodes, {} classes)",
                self.nodes, self.classes
            )));
        }
        for (name, p) in [
            ("p_in", self.p_in),
            ("p_out", self.p_out),
            ("attr_in", self.attr_in),
            ("attr_out", self.attr_out),
            ("labeled_fraction", self.labeled_fraction),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} = {p} is not a probability")));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let labels: Vec<usize> = (0..self.nodes).map(|n| n % self.classes).collect();
        let mut edges = Vec::new();
        for u in 0..self.nodes {
            for v in u + 1..self.nodes {
                let p = if labels[u] == labels[v] { self.p_in } else { self.p_out };
                if rng.gen_bool(p) {
                    edges.push((u, v));
                }
            }
        }
        let mut ones = Vec::new();
        for (n, &y) in labels.iter().enumerate() {
            for d in 0..self.features {
                let p = if d % self.classes == y { self.attr_in } else { self.attr_out };
                if rng.gen_bool(p) {
                    ones.push((n, d));
                }
            }
        }
        // Stratified split: every class gets at least one labeled node.
        let target = ((self.labeled_fraction * self.nodes as f64).round() as usize).max(self.classes);
        let mut split = vec![Some(SplitTag::Unlabeled); self.nodes];
        let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); self.classes];
        for (n, &y) in labels.iter().enumerate() {
            by_class[y].push(n);
        }
        for members in by_class.iter_mut() {
            members.shuffle(&mut rng);
        }
        let mut chosen = 0;
        let mut round = 0;
        while chosen < target.min(self.nodes) {
            for members in &by_class {
                if chosen < target && round < members.len() {
                    split[members[round]] = Some(SplitTag::Labeled);
                    chosen += 1;
                }
            }
            round += 1;
        }
        Graph::new(self.nodes, self.features, self.classes, &edges, &ones)?
            .with_labels(labels.into_iter().map(Some).collect())?
            .with_split(split)
    }
}
