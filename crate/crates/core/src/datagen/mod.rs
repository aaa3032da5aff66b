//! Two-class synthetic client graphs with controlled class imbalance and
//! neighborhood mix, plus the separability verifier built on them.
//!
//! In client `k` every neighbor of every node comes from the client's
//! majority class with probability `p[k]`, and the minority:majority node
//! ratio is `q[k]`. Features are drawn from `N(mu_c, I)`.

mod separability;

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

pub use separability::{
    dist_closed_form, dist_prime_closed_form, empirical_margin, global_neighbor_means,
    margins_on_graphs, separability_report, MarginEstimate, MarginMode, SeparabilityReport,
};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::numcore::Matrix;
use crate::rng;

/// Parameters of the generator. Per-client vectors share one length.
#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    pub mu1: Vec<f64>,
    pub mu2: Vec<f64>,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    /// Majority class (0 or 1) per client.
    pub majority: Vec<usize>,
    pub nodes: usize,
    pub mean_degree: f64,
}

impl GenConfig {
    pub fn clients(&self) -> usize {
        self.p.len()
    }

    pub fn feature_dim(&self) -> usize {
        self.mu1.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.mu1.len() != self.mu2.len() || self.mu1.is_empty() {
            return Err(Error::Config("mu1 and mu2 need the same non-zero length".into()));
        }
        if self.mu1 == self.mu2 {
            return Err(Error::Config("mu1 must differ from mu2".into()));
        }
        if self.mu1.iter().chain(&self.mu2).any(|v| !v.is_finite()) {
            return Err(Error::Config("class means must be finite".into()));
        }
        let k = self.p.len();
        if k == 0 || self.q.len() != k || self.majority.len() != k {
            return Err(Error::Config(format!(
                "need matching non-empty p/q/majority lists, got {}/{}/{}",
                k,
                self.q.len(),
                self.majority.len()
            )));
        }
        check_pq(&self.p, &self.q)?;
        if let Some(m) = self.majority.iter().find(|&&m| m > 1) {
            return Err(Error::Config(format!("majority class {m} is not 0 or 1")));
        }
        if self.nodes < 2 {
            return Err(Error::Config("each client needs at least 2 nodes".into()));
        }
        if !(self.mean_degree.is_finite() && self.mean_degree > 0.0) {
            return Err(Error::Config("mean degree must be positive".into()));
        }
        Ok(())
    }

    /// Minority node count for client `k`.
    pub fn minority_count(&self, k: usize) -> usize {
        let q = self.q[k];
        libm::round(self.nodes as f64 * q / (1.0 + q)) as usize
    }
}

pub(crate) fn check_pq(p: &[f64], q: &[f64]) -> Result<()> {
    if p.len() != q.len() || p.is_empty() {
        return Err(Error::Config("p and q need the same non-zero length".into()));
    }
    for (k, (&pk, &qk)) in p.iter().zip(q).enumerate() {
        if !(pk > 0.5 && pk < 1.0) {
            return Err(Error::Config(format!("client {k}: p = {pk} not in (1/2, 1)")));
        }
        if !(qk > 0.0 && qk < 1.0) {
            return Err(Error::Config(format!("client {k}: q = {qk} not in (0, 1)")));
        }
    }
    Ok(())
}

/// Edge counts `(majority-majority, cross, minority-minority)` that make a
/// random edge end seen from either class land in the majority with
/// probability `p`.
fn block_budget(total: usize, p: f64) -> (usize, usize, usize) {
    let cross = 2.0 * (1.0 - p) / p;
    let minor = (1.0 - p) * (1.0 - p) / (p * p);
    let z = 1.0 + cross + minor;
    let e_mm = libm::round(total as f64 / z) as usize;
    let e_x = (libm::round(total as f64 * cross / z) as usize).min(total - e_mm);
    (e_mm, e_x, total - e_mm - e_x)
}

fn sample_block(
    a: &[usize],
    b: Option<&[usize]>,
    count: usize,
    edges: &mut BTreeSet<(usize, usize)>,
    rng: &mut rng::Rng,
) -> Result<()> {
    let capacity = match b {
        Some(b) => a.len() * b.len(),
        None => a.len() * a.len().saturating_sub(1) / 2,
    };
    if count > capacity {
        return Err(Error::Config(format!(
            "{count} edges requested in a block with room for {capacity}; lower mean_degree"
        )));
    }
    let mut added = 0;
    while added < count {
        let u = a[rng.random_range(0..a.len())];
        let v = match b {
            Some(b) => b[rng.random_range(0..b.len())],
            None => a[rng.random_range(0..a.len())],
        };
        if u != v && edges.insert((u.min(v), u.max(v))) {
            added += 1;
        }
    }
    Ok(())
}

/// Draws client `k`'s graph. All nodes are labeled.
pub fn generate_client_graph(cfg: &GenConfig, k: usize, seed: u64) -> Result<Graph> {
    cfg.validate()?;
    if k >= cfg.clients() {
        return Err(Error::Config(format!("client {k} out of {}", cfg.clients())));
    }
    let mut r = rng::rng(seed, &[rng::tag::GENERATOR, k as u64]);
    let n = cfg.nodes;
    let n_min = cfg.minority_count(k).clamp(1, n - 1);
    let major = cfg.majority[k];
    let minor = 1 - major;

    let mut labels = vec![major; n];
    labels[..n_min].fill(minor);
    labels.shuffle(&mut r);
    let maj_nodes: Vec<usize> = (0..n).filter(|&v| labels[v] == major).collect();
    let min_nodes: Vec<usize> = (0..n).filter(|&v| labels[v] == minor).collect();

    let total = libm::round(n as f64 * cfg.mean_degree / 2.0) as usize;
    let (e_mm, e_x, e_nn) = block_budget(total, cfg.p[k]);
    let mut edges = BTreeSet::new();
    sample_block(&maj_nodes, None, e_mm, &mut edges, &mut r)?;
    sample_block(&maj_nodes, Some(&min_nodes), e_x, &mut edges, &mut r)?;
    sample_block(&min_nodes, None, e_nn, &mut edges, &mut r)?;

    let d = cfg.feature_dim();
    let mut x = Matrix::zeros(n, d);
    for v in 0..n {
        let mu = if labels[v] == 0 { &cfg.mu1 } else { &cfg.mu2 };
        for (dst, &m) in x.row_mut(v).iter_mut().zip(mu) {
            let z: f64 = StandardNormal.sample(&mut r);
            *dst = m + z;
        }
    }
    let edges: Vec<(usize, usize)> = edges.into_iter().collect();
    Graph::from_edges(&edges, x, labels.into_iter().map(Some).collect(), 2)
}

pub fn generate_clients(cfg: &GenConfig, seed: u64) -> Result<Vec<Graph>> {
    (0..cfg.clients())
        .map(|k| generate_client_graph(cfg, k, seed))
        .collect()
}
