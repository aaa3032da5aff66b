//! Multi-level Louvain modularity optimization.
//!
//! Each pass runs local moves until no node changes community, then
//! coarsens communities into weighted super-nodes. Passes stop once the
//! modularity gain of a pass drops to `1e-7` or below. Node visit order is
//! shuffled per level by the seed; among equally good target communities the
//! lowest id wins, and a node only leaves its community for a strictly better
//! one.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng;

/// Minimum per-pass modularity improvement for another pass.
pub const MIN_PASS_GAIN: f64 = 1e-7;

/// Dense community ids per node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommunityAssignment {
    membership: Vec<usize>,
    count: usize,
}

impl CommunityAssignment {
    /// Renumbers arbitrary labels densely by first appearance.
    pub fn from_labels(labels: &[usize]) -> Self {
        let mut remap: Vec<Option<usize>> = Vec::new();
        let mut membership = Vec::with_capacity(labels.len());
        let mut count = 0;
        for &l in labels {
            if l >= remap.len() {
                remap.resize(l + 1, None);
            }
            let id = *remap[l].get_or_insert_with(|| {
                count += 1;
                count - 1
            });
            membership.push(id);
        }
        Self { membership, count }
    }

    pub fn membership(&self) -> &[usize] {
        &self.membership
    }

    pub fn community(&self, v: usize) -> usize {
        self.membership[v]
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.count];
        for &c in &self.membership {
            s[c] += 1;
        }
        s
    }
}

/// Louvain result plus the modularity reached after every pass.
#[derive(Debug, Clone)]
pub struct LouvainOutcome {
    pub assignment: CommunityAssignment,
    /// Entry 0 is the all-singletons start; entry `i` follows pass `i`.
    pub modularity_per_pass: Vec<f64>,
}

/// Weighted graph with explicit self-loop mass. `self_w[i]` is `A_ii` and
/// `degree[i] = Σ_j A_ij` including it.
struct WeightedGraph {
    adj: Vec<Vec<(usize, f64)>>,
    self_w: Vec<f64>,
    degree: Vec<f64>,
    total: f64,
}

impl WeightedGraph {
    fn from_graph(g: &Graph) -> Self {
        let n = g.node_count();
        let adj: Vec<Vec<(usize, f64)>> = (0..n)
            .map(|i| g.adjacency().neighbors(i).collect())
            .collect();
        let degree: Vec<f64> = adj.iter().map(|r| r.iter().map(|e| e.1).sum()).collect();
        let total = degree.iter().sum();
        Self {
            adj,
            self_w: vec![0.0; n],
            degree,
            total,
        }
    }

    fn len(&self) -> usize {
        self.adj.len()
    }

    fn modularity(&self, comm: &[usize], count: usize) -> f64 {
        let mut inside = vec![0.0; count];
        let mut tot = vec![0.0; count];
        for i in 0..self.len() {
            let c = comm[i];
            tot[c] += self.degree[i];
            inside[c] += self.self_w[i];
            for &(j, w) in &self.adj[i] {
                if comm[j] == c {
                    inside[c] += w;
                }
            }
        }
        let m2 = self.total;
        inside
            .iter()
            .zip(&tot)
            .map(|(&a, &t)| a / m2 - (t / m2) * (t / m2))
            .sum()
    }

    /// Local-move phase. Returns dense labels and whether anything moved.
    fn local_moves(&self, rng: &mut rng::Rng) -> (Vec<usize>, bool) {
        let n = self.len();
        let mut comm: Vec<usize> = (0..n).collect();
        let mut tot = self.degree.clone();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);

        let mut link = vec![0.0; n];
        let mut seen = vec![false; n];
        let mut touched: Vec<usize> = Vec::new();
        let mut any_move = false;
        let eps = 1e-12 * self.total.max(1.0);
        loop {
            let mut moved = false;
            for &i in &order {
                let ci = comm[i];
                let ki = self.degree[i];
                for &(j, w) in &self.adj[i] {
                    let c = comm[j];
                    if !seen[c] {
                        seen[c] = true;
                        touched.push(c);
                    }
                    link[c] += w;
                }
                tot[ci] -= ki;
                let gain = |c: usize, link_c: f64| link_c - ki * tot[c] / self.total;
                let stay = gain(ci, link[ci]);
                touched.sort_unstable();
                let mut best = ci;
                let mut best_gain = f64::NEG_INFINITY;
                for &c in &touched {
                    if c == ci {
                        continue;
                    }
                    let g = gain(c, link[c]);
                    if g > best_gain {
                        best_gain = g;
                        best = c;
                    }
                }
                if best != ci && best_gain > stay + eps {
                    comm[i] = best;
                    tot[best] += ki;
                    moved = true;
                    any_move = true;
                } else {
                    tot[ci] += ki;
                }
                for &c in &touched {
                    link[c] = 0.0;
                    seen[c] = false;
                }
                touched.clear();
            }
            if !moved {
                break;
            }
        }
        let dense = CommunityAssignment::from_labels(&comm);
        (dense.membership, any_move)
    }

    fn aggregate(&self, comm: &[usize], count: usize) -> WeightedGraph {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); count];
        let mut self_w = vec![0.0; count];
        let mut degree = vec![0.0; count];
        for i in 0..self.len() {
            let c = comm[i];
            degree[c] += self.degree[i];
            self_w[c] += self.self_w[i];
            for &(j, w) in &self.adj[i] {
                let d = comm[j];
                if d == c {
                    self_w[c] += w;
                } else {
                    rows[c].push((d, w));
                }
            }
        }
        let adj = rows
            .into_iter()
            .map(|mut r| {
                r.sort_by_key(|e| e.0);
                let mut merged: Vec<(usize, f64)> = Vec::with_capacity(r.len());
                for (d, w) in r {
                    match merged.last_mut() {
                        Some(last) if last.0 == d => last.1 += w,
                        _ => merged.push((d, w)),
                    }
                }
                merged
            })
            .collect();
        WeightedGraph {
            adj,
            self_w,
            degree,
            total: self.total,
        }
    }
}

/// `Q = Σ_c [in_c / 2m − (tot_c / 2m)²]` on the unit-weight graph.
pub fn modularity(graph: &Graph, assignment: &CommunityAssignment) -> f64 {
    let wg = WeightedGraph::from_graph(graph);
    if wg.total == 0.0 {
        return 0.0;
    }
    wg.modularity(assignment.membership(), assignment.count())
}

pub fn louvain(graph: &Graph, seed: u64) -> Result<CommunityAssignment> {
    louvain_traced(graph, seed).map(|o| o.assignment)
}

pub fn louvain_traced(graph: &Graph, seed: u64) -> Result<LouvainOutcome> {
    if graph.edge_count() == 0 {
        return Err(Error::Degenerate("Louvain needs at least one edge".into()));
    }
    let base = WeightedGraph::from_graph(graph);
    let n = base.len();
    let mut current = WeightedGraph::from_graph(graph);
    let mut membership: Vec<usize> = (0..n).collect();
    let mut count = n;
    let mut best_q = base.modularity(&membership, count);
    let mut history = vec![best_q];
    let mut level = 0u64;
    loop {
        let mut r = rng::rng(seed, &[rng::tag::LOUVAIN, level]);
        let (comm, moved) = current.local_moves(&mut r);
        if !moved {
            break;
        }
        let level_count = comm.iter().max().map_or(0, |&m| m + 1);
        let next: Vec<usize> = membership.iter().map(|&c| comm[c]).collect();
        let q = base.modularity(&next, level_count);
        if q < best_q {
            break;
        }
        membership = next;
        count = level_count;
        history.push(q);
        let gain = q - best_q;
        best_q = q;
        if gain <= MIN_PASS_GAIN {
            break;
        }
        current = current.aggregate(&comm, level_count);
        level += 1;
    }
    Ok(LouvainOutcome {
        assignment: CommunityAssignment { membership, count },
        modularity_per_pass: history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::Matrix;

    fn graph(n: usize, edges: &[(usize, usize)]) -> Graph {
        Graph::from_edges(edges, Matrix::zeros(n, 1), vec![None; n], 1).unwrap()
    }

    fn complete(n: usize) -> Graph {
        let mut e = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                e.push((i, j));
            }
        }
        graph(n, &e)
    }

    #[test]
    fn single_community_modularity_is_zero() {
        let g = complete(6);
        let a = CommunityAssignment::from_labels(&[0; 6]);
        assert!(modularity(&g, &a).abs() < 1e-15);
    }

    #[test]
    fn complete_graph_collapses_to_one() {
        let a = louvain(&complete(8), 3).unwrap();
        assert_eq!(a.count(), 1);
    }

    #[test]
    fn edgeless_is_degenerate() {
        assert!(matches!(louvain(&graph(3, &[]), 1), Err(Error::Degenerate(_))));
    }

    #[test]
    fn seeded_runs_repeat() {
        let mut edges = alloc::collections::BTreeSet::new();
        for i in 0..30usize {
            let j = (i * 7 + 3) % 31;
            if i != j {
                edges.insert((i.min(j), i.max(j)));
            }
        }
        let edges: Vec<_> = edges.into_iter().collect();
        let g = graph(31, &edges);
        assert_eq!(louvain(&g, 9).unwrap(), louvain(&g, 9).unwrap());
    }

    #[test]
    fn dense_relabel() {
        let a = CommunityAssignment::from_labels(&[7, 3, 7, 9]);
        assert_eq!(a.membership(), &[0, 1, 0, 2]);
        assert_eq!(a.count(), 3);
    }
}
