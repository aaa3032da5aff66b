use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{check_pq, generate_clients, GenConfig};
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::graph::{normalized_adjacency, Graph, Normalization};
use crate::numcore::Matrix;
use crate::rng;

fn norm(v: &[f64]) -> f64 {
    libm::sqrt(v.iter().map(|x| x * x).sum())
}

/// Half the distance between the class means.
pub fn dist_closed_form(mu1: &[f64], mu2: &[f64]) -> Result<f64> {
    if mu1.len() != mu2.len() {
        return Err(Error::shape(
            "dist",
            format!("{} vs {}", mu1.len(), mu2.len()),
        ));
    }
    let d: Vec<f64> = mu1.iter().zip(mu2).map(|(a, b)| a - b).collect();
    Ok(norm(&d) / 2.0)
}

/// Class-to-boundary distance when every node uses the global class-wise
/// neighbor means: `(1 + Σ_k (1 - q_k)(p_k - 1/2)) · dist`.
pub fn dist_prime_closed_form(mu1: &[f64], mu2: &[f64], p: &[f64], q: &[f64]) -> Result<f64> {
    check_pq(p, q)?;
    let factor: f64 = 1.0
        + p.iter()
            .zip(q)
            .map(|(&pk, &qk)| (1.0 - qk) * (pk - 0.5))
            .sum::<f64>();
    Ok(factor * dist_closed_form(mu1, mu2)?)
}

/// Mean neighbor feature per node; isolated nodes get `None`.
fn neighbor_means(g: &Graph) -> Result<(Matrix, Vec<bool>)> {
    let h = normalized_adjacency(g, Normalization::MeanRowStochastic).spmm(g.features())?;
    let has = (0..g.node_count()).map(|v| g.degree(v) > 0).collect();
    Ok((h, has))
}

fn two_class(g: &Graph) -> Result<()> {
    if g.num_classes() != 2 {
        return Err(Error::Config(format!(
            "separability needs 2 classes, graph has {}",
            g.num_classes()
        )));
    }
    Ok(())
}

/// Global class-wise neighbor information `(s1, s2)`.
///
/// Each client contributes its mean aggregated-neighbor feature over nodes
/// of class `c`, weighted by 1 when `c` is the client's majority and by the
/// client's minority:majority ratio otherwise.
pub fn global_neighbor_means(graphs: &[Graph]) -> Result<(Vec<f64>, Vec<f64>)> {
    let first = graphs
        .first()
        .ok_or_else(|| Error::EmptyInput("no client graphs".into()))?;
    let d = first.feature_dim();
    let mut s = [vec![0.0; d], vec![0.0; d]];
    let mut seen = [false; 2];
    for g in graphs {
        two_class(g)?;
        if g.feature_dim() != d {
            return Err(Error::shape("global_neighbor_means", "feature dims differ"));
        }
        let counts = g.class_counts(0..g.node_count());
        let major = if counts[1] > counts[0] { 1 } else { 0 };
        let (h, has) = neighbor_means(g)?;
        for c in 0..2 {
            let mut acc = vec![0.0; d];
            let mut n = 0usize;
            for v in 0..g.node_count() {
                if has[v] && g.label(v) == Some(c) {
                    for (a, &x) in acc.iter_mut().zip(h.row(v)) {
                        *a += x;
                    }
                    n += 1;
                }
            }
            if n == 0 {
                continue;
            }
            seen[c] = true;
            let w = counts[c] as f64 / counts[major] as f64;
            for (dst, a) in s[c].iter_mut().zip(&acc) {
                *dst += w * a / n as f64;
            }
        }
    }
    if !seen[0] || !seen[1] {
        return Err(Error::EmptyInput(
            "a class has no non-isolated node in any client".into(),
        ));
    }
    let [s1, s2] = s;
    Ok((s1, s2))
}

/// Half the norm of the difference between class-mean representations.
fn class_margin(g: &Graph, rep: impl Fn(usize) -> Option<Vec<f64>>) -> Result<f64> {
    let d = g.feature_dim();
    let mut sums = [vec![0.0; d], vec![0.0; d]];
    let mut counts = [0usize; 2];
    for v in 0..g.node_count() {
        let (Some(c), Some(r)) = (g.label(v), rep(v)) else {
            continue;
        };
        for (a, x) in sums[c].iter_mut().zip(r) {
            *a += x;
        }
        counts[c] += 1;
    }
    if counts.contains(&0) {
        return Err(Error::EmptyInput("client is missing a class".into()));
    }
    let diff: Vec<f64> = sums[0]
        .iter()
        .zip(&sums[1])
        .map(|(a, b)| a / counts[0] as f64 - b / counts[1] as f64)
        .collect();
    Ok(norm(&diff) / 2.0)
}

/// Which neighbor information feeds the representation `x_i + h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarginMode {
    /// `h` = mean of the node's own neighbors' features (non-isolated nodes).
    Local,
    /// `h` = the global neighbor mean of the node's class.
    Global,
}

/// Client-averaged margins `(local, global)` on one set of client graphs.
pub fn margins_on_graphs(graphs: &[Graph]) -> Result<(f64, f64)> {
    let (s1, s2) = global_neighbor_means(graphs)?;
    let mut local = 0.0;
    let mut global = 0.0;
    for g in graphs {
        let (h, has) = neighbor_means(g)?;
        let x = g.features();
        local += class_margin(g, |v| {
            has[v].then(|| x.row(v).iter().zip(h.row(v)).map(|(a, b)| a + b).collect())
        })?;
        global += class_margin(g, |v| {
            let s = if g.label(v) == Some(0) { &s1 } else { &s2 };
            Some(x.row(v).iter().zip(s).map(|(a, b)| a + b).collect())
        })?;
    }
    let k = graphs.len() as f64;
    Ok((local / k, global / k))
}

/// Mean over trials with its standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub per_trial: Vec<f64>,
}

impl MarginEstimate {
    fn from_samples(per_trial: Vec<f64>) -> Self {
        let n = per_trial.len() as f64;
        let mean = per_trial.iter().sum::<f64>() / n;
        let stderr = if per_trial.len() > 1 {
            let var = per_trial.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
            libm::sqrt(var / n)
        } else {
            0.0
        };
        Self {
            mean,
            stderr,
            per_trial,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeparabilityReport {
    pub dist: f64,
    pub dist_prime: f64,
    pub local: MarginEstimate,
    pub global: MarginEstimate,
    /// Trials in which the global margin beat the local one.
    pub global_wins: usize,
}

fn trial_margins<E: Executor>(
    cfg: &GenConfig,
    trials: usize,
    seed: u64,
    exec: &E,
) -> Result<Vec<(f64, f64)>> {
    if trials == 0 {
        return Err(Error::Config("need at least one trial".into()));
    }
    cfg.validate()?;
    let seeds: Vec<u64> = (0..trials as u64)
        .map(|t| rng::derive(seed, &[rng::tag::TRIAL, t]))
        .collect();
    exec.map(seeds, |_, s| margins_on_graphs(&generate_clients(cfg, s)?))
        .into_iter()
        .collect()
}

/// Regenerates the clients `trials` times and measures one margin mode.
pub fn empirical_margin<E: Executor>(
    cfg: &GenConfig,
    mode: MarginMode,
    trials: usize,
    seed: u64,
    exec: &E,
) -> Result<MarginEstimate> {
    let pairs = trial_margins(cfg, trials, seed, exec)?;
    Ok(MarginEstimate::from_samples(
        pairs
            .into_iter()
            .map(|(l, g)| if mode == MarginMode::Local { l } else { g })
            .collect(),
    ))
}

/// Closed forms next to paired Monte-Carlo margins.
pub fn separability_report<E: Executor>(
    cfg: &GenConfig,
    trials: usize,
    seed: u64,
    exec: &E,
) -> Result<SeparabilityReport> {
    let pairs = trial_margins(cfg, trials, seed, exec)?;
    let global_wins = pairs.iter().filter(|(l, g)| g > l).count();
    let (local, global): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    Ok(SeparabilityReport {
        dist: dist_closed_form(&cfg.mu1, &cfg.mu2)?,
        dist_prime: dist_prime_closed_form(&cfg.mu1, &cfg.mu2, &cfg.p, &cfg.q)?,
        local: MarginEstimate::from_samples(local),
        global: MarginEstimate::from_samples(global),
        global_wins,
    })
}
