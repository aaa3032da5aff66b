use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::Matrix;
use crate::error::{Error, Result};

/// Symmetric sparse adjacency in CSR layout.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseAdj {
    n: usize,
    offsets: Vec<usize>,
    cols: Vec<usize>,
    weights: Vec<f64>,
}

impl SparseAdj {
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            offsets: vec![0; n + 1],
            cols: Vec::new(),
            weights: Vec::new(),
        }
    }

    /// Builds from directed `(row, col, weight)` triplets. Duplicates are an
    /// error; the result must be symmetric.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        sorted.sort_by_key(|t| (t.0, t.1));
        let mut offsets = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(sorted.len());
        let mut weights = Vec::with_capacity(sorted.len());
        for (k, &(r, c, w)) in sorted.iter().enumerate() {
            if r >= n || c >= n {
                return Err(Error::Validation(format!(
                    "entry ({r},{c}) outside {n} nodes"
                )));
            }
            if k > 0 && sorted[k - 1].0 == r && sorted[k - 1].1 == c {
                return Err(Error::Validation(format!("duplicate entry ({r},{c})")));
            }
            offsets[r + 1] += 1;
            cols.push(c);
            weights.push(w);
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let adj = Self {
            n,
            offsets,
            cols,
            weights,
        };
        adj.check_symmetric()?;
        Ok(adj)
    }

    /// Undirected unit-weight edges, each listed once.
    pub fn from_undirected_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut t = Vec::with_capacity(edges.len() * 2);
        for &(u, v) in edges {
            t.push((u, v, 1.0));
            if u != v {
                t.push((v, u, 1.0));
            }
        }
        Self::from_triplets(n, &t)
    }

    fn check_symmetric(&self) -> Result<()> {
        for i in 0..self.n {
            for (j, w) in self.neighbors(i) {
                match self.weight(j, i) {
                    Some(back) if back == w => {}
                    _ => {
                        return Err(Error::Validation(format!(
                            "entry ({i},{j}) has no matching ({j},{i})"
                        )))
                    }
                }
            }
        }
        Ok(())
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn indices(&self) -> &[usize] {
        &self.cols
    }

    pub fn values(&self) -> &[f64] {
        &self.weights
    }

    /// Number of stored entries in row `i`.
    #[inline]
    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.offsets[i]..self.offsets[i + 1];
        self.cols[r.clone()]
            .iter()
            .copied()
            .zip(self.weights[r].iter().copied())
    }

    pub fn neighbor_ids(&self, i: usize) -> &[usize] {
        &self.cols[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn weight(&self, i: usize, j: usize) -> Option<f64> {
        let r = self.offsets[i]..self.offsets[i + 1];
        self.cols[r.clone()]
            .binary_search(&j)
            .ok()
            .map(|k| self.weights[r.start + k])
    }

    pub fn has_self_loops(&self) -> bool {
        (0..self.n).any(|i| self.weight(i, i).is_some())
    }

    /// Same pattern, weights replaced by `f(row, col, weight)`.
    pub fn map_weights(&self, f: impl Fn(usize, usize, f64) -> f64) -> SparseAdj {
        let mut out = self.clone();
        for i in 0..self.n {
            for k in self.offsets[i]..self.offsets[i + 1] {
                out.weights[k] = f(i, self.cols[k], self.weights[k]);
            }
        }
        out
    }

    /// Row i of the result is `Σ_j w_ij · x_j`.
    pub fn spmm(&self, x: &Matrix) -> Result<Matrix> {
        if x.rows() != self.n {
            return Err(Error::shape(
                "spmm",
                format!("{} nodes x {:?}", self.n, x.shape()),
            ));
        }
        let d = x.cols();
        let mut out = Matrix::zeros(self.n, d);
        for i in 0..self.n {
            let o = out.row_mut(i);
            for (j, w) in self.neighbors(i) {
                for (ov, &xv) in o.iter_mut().zip(x.row(j)) {
                    *ov += w * xv;
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ · x`; equals [`spmm`](Self::spmm) for symmetric weights but is
    /// kept separate so row-normalized operators differentiate correctly.
    pub fn spmm_t(&self, x: &Matrix) -> Result<Matrix> {
        if x.rows() != self.n {
            return Err(Error::shape(
                "spmm_t",
                format!("{} nodes x {:?}", self.n, x.shape()),
            ));
        }
        let d = x.cols();
        let mut out = Matrix::zeros(self.n, d);
        for i in 0..self.n {
            let xi = x.row(i);
            for (j, w) in self.neighbors(i) {
                for (ov, &xv) in out.row_mut(j).iter_mut().zip(xi) {
                    *ov += w * xv;
                }
            }
        }
        Ok(out)
    }

    pub fn to_dense(&self) -> Matrix {
        let mut m = Matrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, w) in self.neighbors(i) {
                m[(i, j)] = w;
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_adjacency_gives_zeros() {
        let adj = SparseAdj::empty(3);
        let x = Matrix::filled(3, 2, 1.5);
        assert_eq!(adj.spmm(&x).unwrap(), Matrix::zeros(3, 2));
    }

    #[test]
    fn single_edge_swaps_rows() {
        let adj = SparseAdj::from_undirected_edges(2, &[(0, 1)]).unwrap();
        let x = Matrix::from_rows(&[[1.0], [5.0]]).unwrap();
        assert_eq!(adj.spmm(&x).unwrap().as_slice(), &[5.0, 1.0]);
    }

    #[test]
    fn asymmetric_triplets_rejected() {
        let err = SparseAdj::from_triplets(3, &[(0, 1, 1.0)]).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
        let err = SparseAdj::from_triplets(2, &[(0, 1, 1.0), (1, 0, 2.0)]).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn duplicate_rejected() {
        let err = SparseAdj::from_undirected_edges(3, &[(0, 1), (1, 0)]).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn spmm_shape_checked() {
        let adj = SparseAdj::empty(3);
        assert!(matches!(
            adj.spmm(&Matrix::zeros(2, 1)),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn columns_sorted_per_row() {
        let adj = SparseAdj::from_undirected_edges(4, &[(0, 3), (0, 1), (2, 0)]).unwrap();
        assert_eq!(adj.neighbor_ids(0), &[1, 2, 3]);
        assert_eq!(adj.degree(0), 3);
    }
}
