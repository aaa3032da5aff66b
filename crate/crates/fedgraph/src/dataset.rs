//! Client directories: `client_<i>.graph` plus `client_<i>.split` for
//! `i = 0, 1, ...` with no gaps.

use std::path::{Path, PathBuf};

use fedgraph_core::partition::ClientDataset;

use crate::error::{create_dir, CliError, Result};
use crate::formats::graph::{load_graph, load_split, save_graph, save_split};

pub fn graph_path(dir: &Path, i: usize) -> PathBuf {
    dir.join(format!("client_{i}.graph"))
}

pub fn split_path(dir: &Path, i: usize) -> PathBuf {
    dir.join(format!("client_{i}.split"))
}

pub fn save_clients(dir: &Path, clients: &[ClientDataset]) -> Result<()> {
    create_dir(dir)?;
    for (i, c) in clients.iter().enumerate() {
        save_graph(&c.graph, &graph_path(dir, i))?;
        save_split(&c.split, &split_path(dir, i))?;
    }
    Ok(())
}

/// Loads every client in `dir`. Node ids in the files are the client-local
/// ids, which become `original_ids` as well.
pub fn load_clients(dir: &Path) -> Result<Vec<ClientDataset>> {
    if !dir.is_dir() {
        return Err(CliError::Config(format!(
            "data directory {} does not exist",
            dir.display()
        )));
    }
    let mut out = Vec::new();
    loop {
        let i = out.len();
        let gp = graph_path(dir, i);
        if !gp.exists() {
            break;
        }
        let graph = load_graph(&gp)?;
        let sp = split_path(dir, i);
        if !sp.exists() {
            return Err(CliError::Validation(format!(
                "{} has no matching {}",
                gp.display(),
                sp.display()
            )));
        }
        let split = load_split(&sp, &graph)?;
        let n = graph.node_count();
        out.push(ClientDataset {
            id: i,
            graph,
            split,
            original_ids: (0..n).collect(),
        });
    }
    if out.is_empty() {
        return Err(CliError::Config(format!(
            "no client_0.graph in {}",
            dir.display()
        )));
    }
    let first = &out[0].graph;
    for c in &out[1..] {
        if c.graph.feature_dim() != first.feature_dim() || c.graph.num_classes() != first.num_classes() {
            return Err(CliError::Validation(format!(
                "client {} has {} features and {} classes, client 0 has {} and {}",
                c.id,
                c.graph.feature_dim(),
                c.graph.num_classes(),
                first.feature_dim(),
                first.num_classes()
            )));
        }
    }
    Ok(out)
}
