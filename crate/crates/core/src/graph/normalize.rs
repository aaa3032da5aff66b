use alloc::format;
use alloc::vec::Vec;

use super::Graph;
use crate::error::{Error, Result};
use crate::numcore::SparseAdj;

/// Propagation operator built from a graph's adjacency.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// `D̃^{-1/2} (A + I) D̃^{-1/2}` with `D̃` the degrees of `A + I`.
    SymSelfLoop,
    /// `D^{-1} A`; rows of isolated nodes stay zero.
    MeanRowStochastic,
}

impl Normalization {
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "sym_selfloop" => Ok(Self::SymSelfLoop),
            "mean_rowstoch" => Ok(Self::MeanRowStochastic),
            other => Err(Error::Config(format!("unknown normalization '{other}'"))),
        }
    }
}

pub fn normalized_adjacency(graph: &Graph, mode: Normalization) -> SparseAdj {
    let adj = graph.adjacency();
    let n = adj.node_count();
    match mode {
        Normalization::SymSelfLoop => {
            let inv_sqrt: Vec<f64> = (0..n)
                .map(|i| 1.0 / libm::sqrt(adj.degree(i) as f64 + 1.0))
                .collect();
            let mut t = Vec::with_capacity(adj.nnz() + n);
            for i in 0..n {
                t.push((i, i, inv_sqrt[i] * inv_sqrt[i]));
                for &j in adj.neighbor_ids(i) {
                    t.push((i, j, inv_sqrt[i] * inv_sqrt[j]));
                }
            }
            SparseAdj::from_triplets(n, &t).expect("symmetric by construction")
        }
        Normalization::MeanRowStochastic => {
            adj.map_weights(|i, _, w| w / adj.degree(i) as f64)
        }
    }
}
