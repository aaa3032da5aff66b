//! Synchronous federated training: FedSpray's two-phase local update with
//! server-side encoder averaging and proxy alignment, plus the Local and
//! FedAvg baselines.

mod local;
mod server;

use alloc::format;
use alloc::vec::Vec;

pub use local::{
    phase1_local, phase2_local, train_gnn, ClientContext, ClientState, Phase2Output,
};
pub use server::{aggregate_encoder, align_proxies, weighted_average, ServerState};

use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::graph::SplitKind;
use crate::harness::{evaluate, Metrics};
use crate::losses::LossWeights;
use crate::models::{Backbone, EncoderParams, GnnParams, StructureProxies};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    FedSpray,
    FedAvg,
    Local,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::FedSpray => "fedspray",
            Method::FedAvg => "fedavg",
            Method::Local => "local",
        }
    }

    pub fn from_name(s: &str) -> Result<Self> {
        match s {
            "fedspray" => Ok(Method::FedSpray),
            "fedavg" => Ok(Method::FedAvg),
            "local" => Ok(Method::Local),
            other => Err(Error::Config(format!("unknown method '{other}'"))),
        }
    }
}

/// Everything that defines one training run.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundConfig {
    pub method: Method,
    pub backbone: Backbone,
    pub rounds: usize,
    pub local_epochs: usize,
    /// Learning rate of the personalized (or shared) GNN.
    pub lr_gnn: f64,
    pub lr_encoder: f64,
    pub lr_proxy: f64,
    pub weights: LossWeights,
    pub hidden_dim: usize,
    /// Embedding and proxy width `d_s`.
    pub proxy_dim: usize,
    pub seed: u64,
    /// Ablation: proxies fixed at zero and never trained.
    pub zero_proxies: bool,
}

impl Default for RoundConfig {
    fn default() -> Self {
        Self {
            method: Method::FedSpray,
            backbone: Backbone::Gcn,
            rounds: 300,
            local_epochs: 5,
            lr_gnn: 0.003,
            lr_encoder: 0.003,
            lr_proxy: 0.02,
            weights: LossWeights::default(),
            hidden_dim: 64,
            proxy_dim: 64,
            seed: 1,
            zero_proxies: false,
        }
    }
}

impl RoundConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 || self.local_epochs == 0 {
            return Err(Error::Config("rounds and local_epochs must be >= 1".into()));
        }
        for (name, lr) in [
            ("lr_gnn", self.lr_gnn),
            ("lr_encoder", self.lr_encoder),
            ("lr_proxy", self.lr_proxy),
        ] {
            if !(lr.is_finite() && lr > 0.0) {
                return Err(Error::Config(format!("{name} = {lr} must be positive")));
            }
        }
        if self.hidden_dim == 0 || self.proxy_dim == 0 {
            return Err(Error::Config("hidden_dim and proxy_dim must be >= 1".into()));
        }
        self.weights.validate()
    }
}

/// One client's metrics on one split after one round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    /// 1-based round number.
    pub round: usize,
    pub client: usize,
    pub split: SplitKind,
    pub metrics: Metrics,
}

/// Client-averaged test accuracy at the selected round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestSummary {
    pub overall: f64,
    /// Mean over clients whose test split has minority nodes.
    pub minority: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub method: Method,
    /// Validation and test metrics for every round and client, ordered by
    /// round, then client, then split.
    pub records: Vec<RoundRecord>,
    /// Round with the highest client-averaged validation accuracy (earliest
    /// on ties).
    pub best_round: usize,
    pub test: TestSummary,
    /// GNN each client evaluates with after the last round.
    pub final_gnns: Vec<GnnParams>,
    /// Final global encoder and proxies (FedSpray only).
    pub server: Option<ServerState>,
}

impl RunResult {
    fn summarize(method: Method, records: Vec<RoundRecord>, rounds: usize) -> Self {
        let mean_over = |round: usize, split: SplitKind| -> (f64, Option<f64>) {
            let rows: Vec<&Metrics> = records
                .iter()
                .filter(|r| r.round == round && r.split == split)
                .map(|r| &r.metrics)
                .collect();
            let overall = rows.iter().map(|m| m.overall).sum::<f64>() / rows.len() as f64;
            let mins: Vec<f64> = rows.iter().filter_map(|m| m.minority).collect();
            let minority = (!mins.is_empty()).then(|| mins.iter().sum::<f64>() / mins.len() as f64);
            (overall, minority)
        };
        let mut best_round = 1;
        let mut best_val = f64::NEG_INFINITY;
        for r in 1..=rounds {
            let (v, _) = mean_over(r, SplitKind::Val);
            if v > best_val {
                best_val = v;
                best_round = r;
            }
        }
        let (overall, minority) = mean_over(best_round, SplitKind::Test);
        Self {
            method,
            records,
            best_round,
            test: TestSummary { overall, minority },
            final_gnns: Vec::new(),
            server: None,
        }
    }
}

fn evaluate_round(
    round: usize,
    clients: &[ClientContext],
    gnns: &[&GnnParams],
    records: &mut Vec<RoundRecord>,
) -> Result<()> {
    for (k, (ctx, gnn)) in clients.iter().zip(gnns).enumerate() {
        let pred = gnn.predict(&ctx.prop, ctx.features())?;
        for split in [SplitKind::Val, SplitKind::Test] {
            let nodes = ctx.data.split.nodes(split);
            if nodes.is_empty() {
                return Err(Error::EmptyInput(format!(
                    "client {k} has an empty {} split",
                    split.name()
                )));
            }
            records.push(RoundRecord {
                round,
                client: k,
                split,
                metrics: evaluate(&pred, ctx.data.graph.labels(), nodes, ctx.majority)?,
            });
        }
    }
    Ok(())
}

fn dims(clients: &[ClientContext]) -> Result<(usize, usize)> {
    let first = clients
        .first()
        .ok_or_else(|| Error::Config("at least one client is required".into()))?;
    let d_x = first.data.graph.feature_dim();
    let d_c = first.data.graph.num_classes();
    for c in clients {
        let g = &c.data.graph;
        if g.feature_dim() != d_x || g.num_classes() != d_c {
            return Err(Error::Validation(format!(
                "client {} has {} features and {} classes, client 0 has {d_x} and {d_c}",
                c.data.id,
                g.feature_dim(),
                g.num_classes()
            )));
        }
    }
    Ok((d_x, d_c))
}

pub fn run<E: Executor>(cfg: &RoundConfig, clients: &[ClientContext], exec: &E) -> Result<RunResult> {
    run_observed(cfg, clients, exec, |_, _| {})
}

/// Like [`run`], calling `observer(round, gnns)` after every round with the
/// GNN each client will be evaluated with.
pub fn run_observed<E, F>(
    cfg: &RoundConfig,
    clients: &[ClientContext],
    exec: &E,
    mut observer: F,
) -> Result<RunResult>
where
    E: Executor,
    F: FnMut(usize, &[&GnnParams]),
{
    cfg.validate()?;
    let (d_x, d_c) = dims(clients)?;
    let init_gnn = |tags: &[u64]| {
        GnnParams::init(cfg.backbone, d_x, cfg.hidden_dim, d_c, &mut rng::rng(cfg.seed, tags))
    };
    let mut records = Vec::new();

    match cfg.method {
        Method::Local | Method::FedSpray => {
            let mut states: Vec<ClientState> = (0..clients.len())
                .map(|k| ClientState::new(init_gnn(&[rng::tag::GNN_INIT, k as u64])))
                .collect();
            let mut server = (cfg.method == Method::FedSpray).then(|| ServerState {
                encoder: EncoderParams::init(
                    d_x,
                    cfg.proxy_dim,
                    d_c,
                    &mut rng::rng(cfg.seed, &[rng::tag::ENCODER_INIT]),
                ),
                proxies: StructureProxies::zeros(d_c, cfg.proxy_dim),
                counts: clients.iter().map(ClientContext::node_count).collect(),
                class_ratios: clients.iter().map(|c| c.class_ratios.clone()).collect(),
            });
            for round in 1..=cfg.rounds {
                let work: Vec<(usize, ClientState)> = states.into_iter().enumerate().collect();
                let srv = server.as_ref();
                let outcomes = exec.map(work, |_, (k, mut st)| {
                    let ctx = &clients[k];
                    let phase2 = match srv {
                        None => {
                            train_gnn(ctx, &mut st, None, 0.0, cfg.local_epochs, cfg.lr_gnn)?;
                            None
                        }
                        Some(s) => {
                            phase1_local(ctx, &mut st, &s.encoder, &s.proxies, cfg)?;
                            Some(phase2_local(ctx, &st, &s.encoder, &s.proxies, cfg)?)
                        }
                    };
                    Ok::<_, Error>((st, phase2))
                });
                let mut next = Vec::with_capacity(clients.len());
                let mut encoders = Vec::new();
                let mut proxies = Vec::new();
                for o in outcomes {
                    let (st, p2) = o?;
                    next.push(st);
                    if let Some(p2) = p2 {
                        encoders.push(p2.encoder);
                        proxies.push(p2.proxies);
                    }
                }
                states = next;
                if let Some(s) = server.as_mut() {
                    s.encoder = aggregate_encoder(&encoders, &s.counts)?;
                    s.proxies = align_proxies(&s.proxies, &proxies, &s.class_ratios)?;
                }
                let gnns: Vec<&GnnParams> = states.iter().map(|s| &s.gnn).collect();
                evaluate_round(round, clients, &gnns, &mut records)?;
                observer(round, &gnns);
            }
            let mut result = RunResult::summarize(cfg.method, records, cfg.rounds);
            result.final_gnns = states.into_iter().map(|s| s.gnn).collect();
            result.server = server;
            Ok(result)
        }
        Method::FedAvg => {
            let mut global = init_gnn(&[rng::tag::GNN_INIT]);
            let counts: Vec<usize> = clients.iter().map(ClientContext::node_count).collect();
            for round in 1..=cfg.rounds {
                let work: Vec<usize> = (0..clients.len()).collect();
                let g = &global;
                let trained = exec.map(work, |_, k| {
                    let mut st = ClientState::new(g.clone());
                    train_gnn(&clients[k], &mut st, None, 0.0, cfg.local_epochs, cfg.lr_gnn)?;
                    Ok::<_, Error>(st.gnn)
                });
                let trained: Vec<GnnParams> = trained.into_iter().collect::<Result<_>>()?;
                global = server::node_weighted(&trained, &counts)?;
                let gnns: Vec<&GnnParams> = (0..clients.len()).map(|_| &global).collect();
                evaluate_round(round, clients, &gnns, &mut records)?;
                observer(round, &gnns);
            }
            let mut result = RunResult::summarize(cfg.method, records, cfg.rounds);
            result.final_gnns = (0..clients.len()).map(|_| global.clone()).collect();
            Ok(result)
        }
    }
}
