//! One function per subcommand. Each reads its inputs, runs the core, and
//! writes CSV or data files; nothing here is interactive.

use std::path::{Path, PathBuf};

use fedgraph_core::datagen::{generate_clients, separability_report};
use fedgraph_core::fed::{run, ClientContext, RunResult};
use fedgraph_core::graph::SplitKind;
use fedgraph_core::harness::{
    evaluate, report_table1, run_seeds, run_sweep, stats_rows, summarize, MeanStd, SeedSummary,
    SweepParam, SweepSpec,
};
use fedgraph_core::models::GnnParams;
use fedgraph_core::partition::{louvain, make_clients, split_labeled, ClientDataset, SplitRatios};
use fedgraph_core::rng;
use log::info;

use crate::dataset::{load_clients, save_clients};
use crate::error::{create_dir, Blame, CliError, Result};
use crate::exec::Pool;
use crate::formats::checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
use crate::formats::config::{load_gen_config, load_run_config, RunSpec};
use crate::formats::graph::load_graph;

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()
        .map_err(|e| CliError::io(Blame::Internal, path, e))
}

pub(crate) fn require_out(out: Option<&Path>) -> Result<&Path> {
    out.ok_or_else(|| CliError::Config("--out is required".into()))
}

/// `generate`: Gen-model clients, each with a random train/val/test split.
pub fn generate(config: &Path, seed: Option<u64>, out: &Path) -> Result<Vec<ClientDataset>> {
    let spec = load_gen_config(config)?;
    let seed = seed.unwrap_or(spec.seed);
    let graphs = generate_clients(&spec.gen, seed)?;
    let clients = graphs
        .into_iter()
        .enumerate()
        .map(|(k, graph)| {
            let mut r = rng::rng(seed, &[rng::tag::SPLIT, k as u64]);
            let split = split_labeled(&graph, SplitRatios::default(), &mut r)?;
            let n = graph.node_count();
            Ok(ClientDataset {
                id: k,
                graph,
                split,
                original_ids: (0..n).collect(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    save_clients(out, &clients)?;
    info!("wrote {} clients to {}", clients.len(), out.display());
    Ok(clients)
}

/// `partition`: Louvain communities of one graph, the largest `k` of which
/// become clients.
pub fn partition(input: &Path, k: usize, seed: u64, out: &Path) -> Result<Vec<ClientDataset>> {
    let graph = load_graph(input)?;
    let assignment = louvain(&graph, seed)?;
    info!(
        "{} communities over {} nodes",
        assignment.count(),
        graph.node_count()
    );
    let clients = make_clients(&graph, &assignment, k, SplitRatios::default(), seed)?;
    save_clients(out, &clients)?;
    Ok(clients)
}

pub const STATS_HEADER: [&str; 5] = ["client", "class", "count", "is_majority", "mean_homophily"];

/// `stats`: per-client, per-class counts and homophily over all labels.
pub fn stats(data: &Path, out: &Path) -> Result<()> {
    let clients = load_clients(data)?;
    let rows: Vec<Vec<String>> = stats_rows(&report_table1(&clients)?)
        .into_iter()
        .map(|r| {
            vec![
                r.client.to_string(),
                r.class.to_string(),
                r.count.to_string(),
                r.is_majority.to_string(),
                opt(r.mean_homophily),
            ]
        })
        .collect();
    write_csv(out, &STATS_HEADER, &rows)
}

pub const METRICS_HEADER: [&str; 5] = ["round", "client", "split", "overall_acc", "minority_acc"];
pub const SUMMARY_HEADER: [&str; 7] = [
    "method",
    "backbone",
    "runs",
    "overall_mean",
    "overall_std",
    "minority_mean",
    "minority_std",
];
pub const RUNS_HEADER: [&str; 4] = ["seed", "best_round", "overall_acc", "minority_acc"];

fn metrics_rows(result: &RunResult) -> Vec<Vec<String>> {
    result
        .records
        .iter()
        .map(|r| {
            vec![
                r.round.to_string(),
                r.client.to_string(),
                r.split.name().to_string(),
                r.metrics.overall.to_string(),
                opt(r.metrics.minority),
            ]
        })
        .collect()
}

fn summary_row(spec: &RunSpec, s: &SeedSummary) -> Vec<String> {
    vec![
        spec.round.method.name().to_string(),
        spec.round.backbone.name().to_string(),
        s.runs.to_string(),
        s.overall.mean.to_string(),
        s.overall.std.to_string(),
        opt(s.minority.map(|m| m.mean)),
        opt(s.minority.map(|m| m.std)),
    ]
}

fn contexts(clients: Vec<ClientDataset>) -> Result<Vec<ClientContext>> {
    clients
        .into_iter()
        .map(|c| ClientContext::new(c).map_err(CliError::from))
        .collect()
}

/// Client GNNs under `client<k>.`, plus the encoder and proxies under
/// `server.` when the run had them.
pub fn checkpoint_of(result: &RunResult) -> Result<Checkpoint> {
    let mut ck = Checkpoint::new();
    for (k, g) in result.final_gnns.iter().enumerate() {
        ck.push_params(&format!("client{k}."), g)?;
    }
    if let Some(s) = &result.server {
        ck.push_params("server.", &s.encoder)?;
        ck.push("server.proxies", s.proxies.s.clone())?;
    }
    Ok(ck)
}

/// Options for [`train`].
#[derive(Debug, Clone, Default)]
pub struct TrainOptions {
    pub seed: Option<u64>,
    pub save: Option<PathBuf>,
    /// Evaluate the client models in this checkpoint instead of training.
    pub load: Option<PathBuf>,
}

/// `train`: writes `metrics.csv` (under `seed_<s>/` when several seeds
/// run), `runs.csv` and `summary.csv` to `out`.
pub fn train(config: &Path, data: &Path, out: &Path, opts: &TrainOptions, pool: &Pool) -> Result<()> {
    let mut spec = load_run_config(config)?;
    if let Some(s) = opts.seed {
        spec.seeds = vec![s];
        spec.round.seed = s;
    }
    let ctxs = contexts(load_clients(data)?)?;
    create_dir(out)?;

    if let Some(path) = &opts.load {
        return evaluate_checkpoint(&spec, &ctxs, path, out);
    }
    if opts.save.is_some() && spec.seeds.len() > 1 {
        return Err(CliError::Config("--save needs a single seed".into()));
    }

    let results = if spec.seeds.len() == 1 {
        vec![run(&spec.round, &ctxs, pool)?]
    } else {
        run_seeds(&spec.round, &spec.seeds, &ctxs, pool)?
    };
    let mut runs = Vec::new();
    for (seed, r) in spec.seeds.iter().zip(&results) {
        let path = if spec.seeds.len() == 1 {
            out.join("metrics.csv")
        } else {
            out.join(format!("seed_{seed}")).join("metrics.csv")
        };
        write_csv(&path, &METRICS_HEADER, &metrics_rows(r))?;
        info!(
            "seed {seed}: best round {} test overall {:.4} minority {}",
            r.best_round,
            r.test.overall,
            opt(r.test.minority)
        );
        runs.push(vec![
            seed.to_string(),
            r.best_round.to_string(),
            r.test.overall.to_string(),
            opt(r.test.minority),
        ]);
    }
    write_csv(&out.join("runs.csv"), &RUNS_HEADER, &runs)?;
    let tests: Vec<_> = results.iter().map(|r| r.test).collect();
    write_csv(
        &out.join("summary.csv"),
        &SUMMARY_HEADER,
        &[summary_row(&spec, &summarize(&tests)?)],
    )?;
    if let Some(path) = &opts.save {
        save_checkpoint(&checkpoint_of(&results[0])?, path)?;
    }
    Ok(())
}

fn evaluate_checkpoint(spec: &RunSpec, ctxs: &[ClientContext], path: &Path, out: &Path) -> Result<()> {
    let ck = load_checkpoint(path)?;
    let c = &spec.round;
    let mut rows = Vec::new();
    let mut overall = Vec::new();
    let mut minority = Vec::new();
    for (k, ctx) in ctxs.iter().enumerate() {
        let g = &ctx.data.graph;
        let mut gnn = GnnParams::init(
            c.backbone,
            g.feature_dim(),
            c.hidden_dim,
            g.num_classes(),
            &mut rng::rng(0, &[]),
        );
        ck.restore(&format!("client{k}."), &mut gnn)?;
        let pred = gnn.predict(&ctx.prop, ctx.features())?;
        for split in [SplitKind::Val, SplitKind::Test] {
            let m = evaluate(&pred, g.labels(), ctx.data.split.nodes(split), ctx.majority)?;
            if split == SplitKind::Test {
                overall.push(m.overall);
                minority.extend(m.minority);
            }
            rows.push(vec![
                "0".to_string(),
                k.to_string(),
                split.name().to_string(),
                m.overall.to_string(),
                opt(m.minority),
            ]);
        }
    }
    if let Some(name) = ck.names().find(|n| {
        n.strip_prefix("client")
            .and_then(|r| r.split('.').next())
            .and_then(|i| i.parse::<usize>().ok())
            .is_some_and(|i| i >= ctxs.len())
    }) {
        return Err(CliError::Validation(format!(
            "checkpoint tensor `{name}` has no matching client in the data"
        )));
    }
    write_csv(&out.join("metrics.csv"), &METRICS_HEADER, &rows)?;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let summary = SeedSummary {
        runs: 1,
        overall: MeanStd {
            mean: mean(&overall),
            std: 0.0,
        },
        minority: (!minority.is_empty()).then(|| MeanStd {
            mean: mean(&minority),
            std: 0.0,
        }),
    };
    write_csv(&out.join("summary.csv"), &SUMMARY_HEADER, &[summary_row(spec, &summary)])
}

pub const SWEEP_HEADER: [&str; 7] = [
    "param",
    "value",
    "runs",
    "overall_mean",
    "overall_std",
    "minority_mean",
    "minority_std",
];

/// `sweep`: one row per value in `out/sweep.csv`.
pub fn sweep(
    config: &Path,
    data: &Path,
    param: &str,
    values: &[f64],
    seeds: Option<Vec<u64>>,
    out: &Path,
    pool: &Pool,
) -> Result<()> {
    let spec = load_run_config(config)?;
    let param = SweepParam::from_name(param)?;
    let sweep = SweepSpec {
        param,
        values: values.to_vec(),
        seeds: seeds.unwrap_or_else(|| spec.seeds.clone()),
    };
    let ctxs = contexts(load_clients(data)?)?;
    let rows: Vec<Vec<String>> = run_sweep(&sweep, &spec.round, &ctxs, pool)?
        .into_iter()
        .map(|r| {
            let s = r.summary;
            vec![
                param.name().to_string(),
                r.value.to_string(),
                s.runs.to_string(),
                s.overall.mean.to_string(),
                s.overall.std.to_string(),
                opt(s.minority.map(|m| m.mean)),
                opt(s.minority.map(|m| m.std)),
            ]
        })
        .collect();
    create_dir(out)?;
    write_csv(&out.join("sweep.csv"), &SWEEP_HEADER, &rows)
}

pub const PROP1_HEADER: [&str; 6] = [
    "dist",
    "dist_prime",
    "margin_local",
    "margin_local_se",
    "margin_global",
    "margin_global_se",
];

/// `verify-prop1`: closed-form distances next to Monte-Carlo margins.
/// Returns how many trials the global margin won.
pub fn verify_prop1(config: &Path, trials: usize, seed: Option<u64>, out: &Path, pool: &Pool) -> Result<usize> {
    let spec = load_gen_config(config)?;
    let r = separability_report(&spec.gen, trials, seed.unwrap_or(spec.seed), pool)?;
    write_csv(
        out,
        &PROP1_HEADER,
        &[vec![
            r.dist.to_string(),
            r.dist_prime.to_string(),
            r.local.mean.to_string(),
            r.local.stderr.to_string(),
            r.global.mean.to_string(),
            r.global.stderr.to_string(),
        ]],
    )?;
    Ok(r.global_wins)
}
