//! Attributed undirected graphs, node splits, homophily statistics and
//! adjacency normalization.

mod homophily;
mod normalize;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

pub(crate) use homophily::argmax_lowest;
pub use homophily::{client_stats, node_homophily, ClientStats, MajorityBasis};
pub use normalize::{normalized_adjacency, Normalization};

use crate::error::{Error, Result};
use crate::numcore::{Matrix, SparseAdj};

/// Undirected graph with dense features and optional integer labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    adjacency: SparseAdj,
    features: Matrix,
    labels: Vec<Option<usize>>,
    num_classes: usize,
}

impl Graph {
    pub fn new(
        adjacency: SparseAdj,
        features: Matrix,
        labels: Vec<Option<usize>>,
        num_classes: usize,
    ) -> Result<Self> {
        let n = adjacency.node_count();
        if features.rows() != n || labels.len() != n {
            return Err(Error::Validation(format!(
                "{n} nodes but {} feature rows and {} labels",
                features.rows(),
                labels.len()
            )));
        }
        if adjacency.has_self_loops() {
            return Err(Error::Validation("self-loops are not allowed".into()));
        }
        if adjacency.values().iter().any(|&w| w != 1.0) {
            return Err(Error::Validation("edge weights must be 1".into()));
        }
        if let Some((i, c)) = labels
            .iter()
            .enumerate()
            .find_map(|(i, l)| l.filter(|&c| c >= num_classes).map(|c| (i, c)))
        {
            return Err(Error::Validation(format!(
                "node {i} has label {c} but only {num_classes} classes"
            )));
        }
        if !features.is_finite() {
            return Err(Error::Validation("non-finite feature value".into()));
        }
        Ok(Self {
            adjacency,
            features,
            labels,
            num_classes,
        })
    }

    /// Builds from an undirected edge list (each edge once).
    pub fn from_edges(
        edges: &[(usize, usize)],
        features: Matrix,
        labels: Vec<Option<usize>>,
        num_classes: usize,
    ) -> Result<Self> {
        let adjacency = SparseAdj::from_undirected_edges(features.rows(), edges)?;
        Self::new(adjacency, features, labels, num_classes)
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.adjacency.node_count()
    }

    #[inline]
    pub fn feature_dim(&self) -> usize {
        self.features.cols()
    }

    #[inline]
    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn adjacency(&self) -> &SparseAdj {
        &self.adjacency
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[Option<usize>] {
        &self.labels
    }

    pub fn label(&self, v: usize) -> Option<usize> {
        self.labels[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency.degree(v)
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.nnz() / 2
    }

    /// Undirected edges as `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for u in 0..self.node_count() {
            for &v in self.adjacency.neighbor_ids(u) {
                if u < v {
                    out.push((u, v));
                }
            }
        }
        out
    }

    pub fn labeled_nodes(&self) -> Vec<usize> {
        (0..self.node_count())
            .filter(|&v| self.labels[v].is_some())
            .collect()
    }

    /// Subgraph induced by `nodes` (in the given order, which becomes the
    /// new id order). Only edges with both endpoints kept survive.
    pub fn induced_subgraph(&self, nodes: &[usize]) -> Result<Graph> {
        let mut local = vec![usize::MAX; self.node_count()];
        for (i, &v) in nodes.iter().enumerate() {
            if v >= self.node_count() || local[v] != usize::MAX {
                return Err(Error::Contract(format!("bad or repeated node {v}")));
            }
            local[v] = i;
        }
        let mut edges = Vec::new();
        for (i, &v) in nodes.iter().enumerate() {
            for &w in self.adjacency.neighbor_ids(v) {
                let j = local[w];
                if j != usize::MAX && i < j {
                    edges.push((i, j));
                }
            }
        }
        let features = self.features.gather_rows(nodes)?;
        let labels = nodes.iter().map(|&v| self.labels[v]).collect();
        Graph::from_edges(&edges, features, labels, self.num_classes)
    }

    /// Relabels nodes: new node `perm[v]` is old node `v`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Graph> {
        let n = self.node_count();
        let mut inverse = vec![usize::MAX; n];
        for (old, &new) in perm.iter().enumerate() {
            if new >= n || inverse[new] != usize::MAX {
                return Err(Error::Contract("perm is not a permutation".into()));
            }
            inverse[new] = old;
        }
        let edges: Vec<(usize, usize)> = self
            .edges()
            .into_iter()
            .map(|(u, v)| (perm[u], perm[v]))
            .collect();
        let features = self.features.gather_rows(&inverse)?;
        let labels = inverse.iter().map(|&o| self.labels[o]).collect();
        Graph::from_edges(&edges, features, labels, self.num_classes)
    }

    /// Per-class counts over `nodes` (unlabeled nodes skipped).
    pub fn class_counts(&self, nodes: impl IntoIterator<Item = usize>) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for v in nodes {
            if let Some(c) = self.labels[v] {
                counts[c] += 1;
            }
        }
        counts
    }
}

/// Which split a node belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SplitKind {
    Train,
    Val,
    Test,
}

impl SplitKind {
    pub fn name(self) -> &'static str {
        match self {
            SplitKind::Train => "train",
            SplitKind::Val => "val",
            SplitKind::Test => "test",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "train" => Some(SplitKind::Train),
            "val" => Some(SplitKind::Val),
            "test" => Some(SplitKind::Test),
            _ => None,
        }
    }
}

/// Disjoint train/validation/test node sets, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NodeSplit {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl NodeSplit {
    pub fn new(mut train: Vec<usize>, mut val: Vec<usize>, mut test: Vec<usize>) -> Self {
        train.sort_unstable();
        val.sort_unstable();
        test.sort_unstable();
        Self { train, val, test }
    }

    pub fn nodes(&self, kind: SplitKind) -> &[usize] {
        match kind {
            SplitKind::Train => &self.train,
            SplitKind::Val => &self.val,
            SplitKind::Test => &self.test,
        }
    }

    /// Checks disjointness and that every split node exists and is labeled.
    pub fn validate(&self, graph: &Graph) -> Result<()> {
        let mut seen = vec![false; graph.node_count()];
        for kind in [SplitKind::Train, SplitKind::Val, SplitKind::Test] {
            for &v in self.nodes(kind) {
                if v >= graph.node_count() {
                    return Err(Error::Validation(format!(
                        "split node {v} outside {} nodes",
                        graph.node_count()
                    )));
                }
                if seen[v] {
                    return Err(Error::Validation(format!("node {v} in two splits")));
                }
                seen[v] = true;
                if graph.label(v).is_none() {
                    return Err(Error::Validation(format!(
                        "split node {v} has no label"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Boolean mask over `n` nodes for the training set.
    pub fn train_mask(&self, n: usize) -> Vec<bool> {
        let mut m = vec![false; n];
        for &v in &self.train {
            m[v] = true;
        }
        m
    }
}
