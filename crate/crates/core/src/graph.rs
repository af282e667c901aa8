//! Attributed graphs, GCN message passing and per-target slicing.
//!
//! A [`SlicedProblem`] restricts the network to the `(L-1)`-hop neighborhood
//! of one target node. Hop sets are sorted by ascending node id and every
//! sliced matrix uses that ordering.

use std::collections::VecDeque;

use ndarray::Array2;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SplitTag {
    Labeled,
    Unlabeled,
}

impl SplitTag {
    pub fn as_str(self) -> &'static str {
        match self {
            SplitTag::Labeled => "labeled",
            SplitTag::Unlabeled => "unlabeled",
        }
    }
}

/// Undirected graph with binary node attributes.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    num_nodes: usize,
    num_features: usize,
    num_classes: usize,
    /// Sorted neighbor lists, self-loops removed.
    neighbors: Vec<Vec<usize>>,
    /// Sorted feature ids whose attribute value is 1.
    attributes: Vec<Vec<usize>>,
    labels: Vec<Option<usize>>,
    split: Vec<Option<SplitTag>>,
}

impl Graph {
    /// Builds a graph from undirected edges and the positions of the 1-entries
    /// of the attribute matrix. Edges are mirrored and deduplicated; self-loops
    /// are dropped since message passing adds them anyway.
    pub fn new(
        num_nodes: usize,
        num_features: usize,
        num_classes: usize,
        edges: &[(usize, usize)],
        ones: &[(usize, usize)],
    ) -> Result<Self> {
        let mut neighbors = vec![Vec::new(); num_nodes];
        for &(u, v) in edges {
            if u >= num_nodes || v >= num_nodes {
                return Err(Error::Graph(format!(
                    "edge ({u}, {v}) references a node outside [0, {num_nodes})"
                )));
            }
            if u != v {
                neighbors[u].push(v);
                neighbors[v].push(u);
            }
        }
        let mut attributes = vec![Vec::new(); num_nodes];
        for &(n, d) in ones {
            if n >= num_nodes || d >= num_features {
                return Err(Error::Graph(format!(
                    "attribute ({n}, {d}) outside a {num_nodes}x{num_features} matrix"
                )));
            }
            attributes[n].push(d);
        }
        for list in neighbors.iter_mut().chain(attributes.iter_mut()) {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Graph {
            num_nodes,
            num_features,
            num_classes,
            neighbors,
            attributes,
            labels: vec![None; num_nodes],
            split: vec![None; num_nodes],
        })
    }

    pub fn with_labels(mut self, labels: Vec<Option<usize>>) -> Result<Self> {
        if labels.len() != self.num_nodes {
            return Err(Error::shape("labels", self.num_nodes, labels.len()));
        }
        if let Some(bad) = labels.iter().flatten().find(|&&y| y >= self.num_classes) {
            return Err(Error::Graph(format!(
                "label {bad} outside [0, {})",
                self.num_classes
            )));
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn with_split(mut self, split: Vec<Option<SplitTag>>) -> Result<Self> {
        if split.len() != self.num_nodes {
            return Err(Error::shape("split", self.num_nodes, split.len()));
        }
        self.split = split;
        Ok(self)
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.neighbors[node]
    }

    pub fn attributes(&self, node: usize) -> &[usize] {
        &self.attributes[node]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors[u].binary_search(&v).is_ok()
    }

    pub fn attribute(&self, node: usize, feature: usize) -> bool {
        self.attributes[node].binary_search(&feature).is_ok()
    }

    /// Number of undirected edges (self-loops excluded).
    pub fn num_edges(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Undirected edges with `u < v`, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.neighbors
            .iter()
            .enumerate()
            .flat_map(|(u, ns)| ns.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    pub fn labels(&self) -> &[Option<usize>] {
        &self.labels
    }

    pub fn label(&self, node: usize) -> Option<usize> {
        self.labels[node]
    }

    pub fn split(&self, node: usize) -> Option<SplitTag> {
        self.split[node]
    }

    pub fn nodes_with_split(&self, tag: SplitTag) -> Vec<usize> {
        (0..self.num_nodes).filter(|&n| self.split[n] == Some(tag)).collect()
    }

    /// Dense 0/1 attribute rows for `nodes`, in the given order.
    pub fn dense_attributes(&self, nodes: &[usize]) -> Array2<f64> {
        let mut x = Array2::zeros((nodes.len(), self.num_features));
        for (row, &n) in nodes.iter().enumerate() {
            for &d in &self.attributes[n] {
                x[[row, d]] = 1.0;
            }
        }
        x
    }

    /// Copy of the graph with the listed `(node, feature)` attributes flipped.
    pub fn with_flipped_attributes(&self, flips: &[(usize, usize)]) -> Result<Self> {
        let mut g = self.clone();
        for &(n, d) in flips {
            if n >= self.num_nodes || d >= self.num_features {
                return Err(Error::Graph(format!("flip ({n}, {d}) out of range")));
            }
            let row = &mut g.attributes[n];
            match row.binary_search(&d) {
                Ok(pos) => {
                    row.remove(pos);
                }
                Err(pos) => row.insert(pos, d),
            }
        }
        Ok(g)
    }

    /// Subgraph induced on `nodes` (deduplicated and sorted). Returns the
    /// subgraph and the sorted list of original ids; local id `i` corresponds
    /// to original id `ids[i]`.
    pub fn induced(&self, nodes: &[usize]) -> (Graph, Vec<usize>) {
        let mut ids = nodes.to_vec();
        ids.sort_unstable();
        ids.dedup();
        let local = |n: usize| ids.binary_search(&n).ok();
        let mut edges = Vec::new();
        let mut ones = Vec::new();
        for (i, &n) in ids.iter().enumerate() {
            for &m in &self.neighbors[n] {
                if let Some(j) = local(m) {
                    if i < j {
                        edges.push((i, j));
                    }
                }
            }
            ones.extend(self.attributes[n].iter().map(|&d| (i, d)));
        }
        let sub = Graph::new(ids.len(), self.num_features, self.num_classes, &edges, &ones)
            .expect("induced subgraph ids are in range");
        let labels = ids.iter().map(|&n| self.labels[n]).collect();
        let split = ids.iter().map(|&n| self.split[n]).collect();
        let sub = sub
            .with_labels(labels)
            .and_then(|g| g.with_split(split))
            .expect("induced labels are consistent");
        (sub, ids)
    }
}

/// Row-major compressed sparse matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from per-row `(col, value)` lists; each list must be sorted by column.
    pub fn from_rows(cols: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for row in &rows {
            for &(c, v) in row {
                col_idx.push(c);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix {
            rows: rows.len(),
            cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[span.clone()].binary_search(&j) {
            Ok(k) => self.values[span.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut out = Array2::zeros((self.rows, self.cols));
        for i in 0..self.rows {
            for (j, v) in self.row(i) {
                out[[i, j]] = v;
            }
        }
        out
    }

    /// Dense block `self[rows, cols]`; both index lists must be sorted.
    pub fn block(&self, rows: &[usize], cols: &[usize]) -> Array2<f64> {
        let mut out = Array2::zeros((rows.len(), cols.len()));
        for (r, &i) in rows.iter().enumerate() {
            for (j, v) in self.row(i) {
                if let Ok(c) = cols.binary_search(&j) {
                    out[[r, c]] = v;
                }
            }
        }
        out
    }

    /// `self · dense`.
    pub fn matmul(&self, dense: &Array2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros((self.rows, dense.ncols()));
        for i in 0..self.rows {
            let mut out_row = out.row_mut(i);
            for (j, v) in self.row(i) {
                out_row.scaled_add(v, &dense.row(j));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// `D̃^{-1/2} (A + I) D̃^{-1/2}`.
    GcnSym,
}

/// Message-passing matrix shared by every GCN layer.
#[derive(Debug, Clone, PartialEq)]
pub struct MessagePassing {
    matrix: CsrMatrix,
    normalization: Normalization,
}

impl MessagePassing {
    /// Symmetrically normalized adjacency with self-loops.
    pub fn gcn(graph: &Graph) -> Self {
        let n = graph.num_nodes();
        let degree: Vec<f64> = (0..n).map(|i| graph.neighbors(i).len() as f64 + 1.0).collect();
        let rows = (0..n)
            .map(|i| {
                let mut cols: Vec<usize> = graph.neighbors(i).to_vec();
                let pos = cols.binary_search(&i).unwrap_err();
                cols.insert(pos, i);
                cols.into_iter()
                    .map(|j| (j, 1.0 / (degree[i] * degree[j]).sqrt()))
                    .collect()
            })
            .collect();
        MessagePassing {
            matrix: CsrMatrix::from_rows(n, rows),
            normalization: Normalization::GcnSym,
        }
    }

    /// Message-passing matrix of layer `l` (1-based). GCN uses the same matrix
    /// for every layer.
    pub fn layer(&self, _l: usize) -> &CsrMatrix {
        &self.matrix
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    /// Restriction of the matrix to the sorted node list `nodes`, keeping the
    /// original normalized entries.
    pub fn restrict(&self, nodes: &[usize]) -> Self {
        let rows = nodes
            .iter()
            .map(|&i| {
                self.matrix
                    .row(i)
                    .filter_map(|(j, v)| nodes.binary_search(&j).ok().map(|c| (c, v)))
                    .collect()
            })
            .collect();
        MessagePassing {
            matrix: CsrMatrix::from_rows(nodes.len(), rows),
            normalization: self.normalization,
        }
    }
}

/// The network restricted to what the output of one target node depends on.
#[derive(Debug, Clone, PartialEq)]
pub struct SlicedProblem {
    pub target: usize,
    pub layer_count: usize,
    /// `hop_sets[k]` holds the nodes within `k` hops of the target, sorted.
    pub hop_sets: Vec<Vec<usize>>,
    /// `sliced_mp[l - 1]` is the layer-`l` slice, with rows indexed by
    /// `hop_sets[L-1-l]` and columns by `hop_sets[L-l]`.
    pub sliced_mp: Vec<Array2<f64>>,
    /// Attributes of `hop_sets[L-1]`.
    pub sliced_attrs: Array2<f64>,
}

impl SlicedProblem {
    /// Layer-`l` message-passing slice (1-based).
    pub fn mp(&self, l: usize) -> &Array2<f64> {
        &self.sliced_mp[l - 1]
    }

    /// Nodes whose attributes enter the computation.
    pub fn input_nodes(&self) -> &[usize] {
        &self.hop_sets[self.layer_count - 1]
    }

    /// Nodes indexing the rows of layer `l`'s representations (`l` ≥ 1).
    pub fn layer_nodes(&self, l: usize) -> &[usize] {
        &self.hop_sets[self.layer_count - l]
    }

    pub fn num_features(&self) -> usize {
        self.sliced_attrs.ncols()
    }

    /// Position of the global node id inside the input node list.
    pub fn local_input(&self, node: usize) -> Option<usize> {
        self.input_nodes().binary_search(&node).ok()
    }
}

/// Nodes within `k` hops of `target` for `k = 0..=depth`, each sorted.
pub fn hop_sets(graph: &Graph, target: usize, depth: usize) -> Vec<Vec<usize>> {
    let mut dist = vec![usize::MAX; graph.num_nodes()];
    let mut queue = VecDeque::new();
    dist[target] = 0;
    queue.push_back(target);
    while let Some(u) = queue.pop_front() {
        if dist[u] == depth {
            continue;
        }
        for &v in graph.neighbors(u) {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    (0..=depth)
        .map(|k| (0..graph.num_nodes()).filter(|&n| dist[n] <= k).collect())
        .collect()
}

/// Slices the message-passing matrices and attributes around `target`.
pub fn slice(
    graph: &Graph,
    mp: &MessagePassing,
    target: usize,
    layer_count: usize,
) -> Result<SlicedProblem> {
    if target >= graph.num_nodes() {
        return Err(Error::Graph(format!(
            "target {target} outside [0, {})",
            graph.num_nodes()
        )));
    }
    if layer_count < 2 {
        return Err(Error::Config(format!("layer count must be >= 2, got {layer_count}")));
    }
    let hops = hop_sets(graph, target, layer_count - 1);
    let sliced_mp = (1..layer_count)
        .map(|l| {
            mp.layer(l)
                .block(&hops[layer_count - 1 - l], &hops[layer_count - l])
        })
        .collect();
    let sliced_attrs = graph.dense_attributes(&hops[layer_count - 1]);
    Ok(SlicedProblem {
        target,
        layer_count,
        hop_sets: hops,
        sliced_mp,
        sliced_attrs,
    })
}
