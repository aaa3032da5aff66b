//! Experiment driver: accuracy metrics, per-client statistics, multi-seed
//! runs and parameter sweeps.

mod metrics;

use alloc::format;
use alloc::vec::Vec;

pub use metrics::{evaluate, Metrics};

use crate::error::{Error, Result};
use crate::exec::{Executor, Sequential};
use crate::fed::{run, ClientContext, RoundConfig, RunResult, TestSummary};
use crate::graph::{client_stats, ClientStats, MajorityBasis};
use crate::partition::ClientDataset;

/// Seeds used when none are given.
pub const DEFAULT_SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

/// Majority class, counts and homophily per client, over all labels.
pub fn report_table1(clients: &[ClientDataset]) -> Result<Vec<ClientStats>> {
    if clients.is_empty() {
        return Err(Error::EmptyInput("no clients".into()));
    }
    clients
        .iter()
        .map(|c| client_stats(&c.graph, MajorityBasis::AllLabels))
        .collect()
}

/// One line of the per-class statistics table.
#[derive(Debug, Clone, PartialEq)]
pub struct StatsRow {
    pub client: usize,
    pub class: usize,
    pub count: usize,
    pub is_majority: bool,
    pub mean_homophily: Option<f64>,
}

pub fn stats_rows(stats: &[ClientStats]) -> Vec<StatsRow> {
    stats
        .iter()
        .enumerate()
        .flat_map(|(k, s)| {
            s.class_counts
                .iter()
                .enumerate()
                .map(move |(c, &count)| StatsRow {
                    client: k,
                    class: c,
                    count,
                    is_majority: c == s.majority,
                    mean_homophily: s.class_homophily[c],
                })
        })
        .collect()
}

/// Mean and sample standard deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            libm::sqrt(values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0))
        } else {
            0.0
        };
        Some(Self { mean, std })
    }
}

/// Test accuracy aggregated over seeds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeedSummary {
    pub runs: usize,
    pub overall: MeanStd,
    /// Over runs that reported a minority accuracy.
    pub minority: Option<MeanStd>,
}

pub fn summarize(tests: &[TestSummary]) -> Result<SeedSummary> {
    let overall: Vec<f64> = tests.iter().map(|t| t.overall).collect();
    let minority: Vec<f64> = tests.iter().filter_map(|t| t.minority).collect();
    Ok(SeedSummary {
        runs: tests.len(),
        overall: MeanStd::of(&overall).ok_or_else(|| Error::EmptyInput("no runs".into()))?,
        minority: MeanStd::of(&minority),
    })
}

/// One run per seed, distributed over `exec`; results are in seed order.
pub fn run_seeds<E: Executor>(
    base: &RoundConfig,
    seeds: &[u64],
    clients: &[ClientContext],
    exec: &E,
) -> Result<Vec<RunResult>> {
    if seeds.is_empty() {
        return Err(Error::Config("seed list is empty".into()));
    }
    let cfgs: Vec<RoundConfig> = seeds
        .iter()
        .map(|&seed| RoundConfig {
            seed,
            ..base.clone()
        })
        .collect();
    exec.map(cfgs, |_, cfg| run(&cfg, clients, &Sequential))
        .into_iter()
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Lambda1,
    ProxyDim,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Lambda1 => "lambda1",
            SweepParam::ProxyDim => "proxy_dim",
        }
    }

    pub fn from_name(s: &str) -> Result<Self> {
        match s {
            "lambda1" => Ok(SweepParam::Lambda1),
            "proxy_dim" => Ok(SweepParam::ProxyDim),
            other => Err(Error::Config(format!("cannot sweep '{other}'"))),
        }
    }

    fn apply(self, base: &RoundConfig, value: f64) -> Result<RoundConfig> {
        let mut cfg = base.clone();
        match self {
            SweepParam::Lambda1 => cfg.weights.lambda1 = value,
            SweepParam::ProxyDim => {
                if !(value >= 1.0 && value.fract() == 0.0) {
                    return Err(Error::Config(format!("proxy_dim {value} is not a positive integer")));
                }
                cfg.proxy_dim = value as usize;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub values: Vec<f64>,
    pub seeds: Vec<u64>,
}

/// Aggregated result for one swept value.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub summary: SeedSummary,
}

/// Runs every `(value, seed)` cell over `exec` and aggregates per value, in
/// the order the values were given.
pub fn run_sweep<E: Executor>(
    spec: &SweepSpec,
    base: &RoundConfig,
    clients: &[ClientContext],
    exec: &E,
) -> Result<Vec<SweepRow>> {
    if spec.values.is_empty() || spec.seeds.is_empty() {
        return Err(Error::Config("sweep needs at least one value and one seed".into()));
    }
    let mut cells = Vec::new();
    for &v in &spec.values {
        let cfg = spec.param.apply(base, v)?;
        for &seed in &spec.seeds {
            cells.push(RoundConfig {
                seed,
                ..cfg.clone()
            });
        }
    }
    let results: Vec<TestSummary> = exec
        .map(cells, |_, cfg| run(&cfg, clients, &Sequential).map(|r| r.test))
        .into_iter()
        .collect::<Result<_>>()?;
    spec.values
        .iter()
        .zip(results.chunks(spec.seeds.len()))
        .map(|(&value, chunk)| {
            Ok(SweepRow {
                value,
                summary: summarize(chunk)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_std_basics() {
        let m = MeanStd::of(&[1.0, 3.0]).unwrap();
        assert_eq!(m.mean, 2.0);
        assert!((m.std - libm::sqrt(2.0)).abs() < 1e-15);
        assert_eq!(MeanStd::of(&[4.0]).unwrap().std, 0.0);
        assert!(MeanStd::of(&[]).is_none());
    }

    #[test]
    fn sweep_param_names() {
        for p in [SweepParam::Lambda1, SweepParam::ProxyDim] {
            assert_eq!(SweepParam::from_name(p.name()).unwrap(), p);
        }
        assert!(SweepParam::from_name("rounds").is_err());
        assert!(SweepParam::ProxyDim.apply(&RoundConfig::default(), 2.5).is_err());
    }
}
