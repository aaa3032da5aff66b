use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use super::CommunityAssignment;
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeSplit};
use crate::rng;

/// Fractions of labeled nodes assigned to train and validation; the rest,
/// including rounding remainders, go to test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitRatios {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self {
            train: 0.4,
            val: 0.3,
            test: 0.3,
        }
    }
}

impl SplitRatios {
    pub fn validate(&self) -> Result<()> {
        let ok = [self.train, self.val, self.test]
            .iter()
            .all(|r| r.is_finite() && *r >= 0.0)
            && (self.train + self.val + self.test - 1.0).abs() < 1e-9;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "split ratios {}/{}/{} must be non-negative and sum to 1",
                self.train, self.val, self.test
            )))
        }
    }
}

/// Shuffles the labeled nodes of `graph` and cuts them by `ratios`.
pub fn split_labeled(graph: &Graph, ratios: SplitRatios, rng: &mut rng::Rng) -> Result<NodeSplit> {
    ratios.validate()?;
    let mut labeled = graph.labeled_nodes();
    labeled.shuffle(rng);
    let n = labeled.len() as f64;
    let n_train = (ratios.train * n + 1e-9) as usize;
    let n_val = ((ratios.val * n + 1e-9) as usize).min(labeled.len() - n_train);
    let test = labeled.split_off(n_train + n_val);
    let val = labeled.split_off(n_train);
    Ok(NodeSplit::new(labeled, val, test))
}

/// One client's private data.
#[derive(Debug, Clone, PartialEq)]
pub struct ClientDataset {
    pub id: usize,
    pub graph: Graph,
    pub split: NodeSplit,
    /// `original_ids[local]` is the node id in the source graph.
    pub original_ids: Vec<usize>,
}

/// Turns the `k` largest communities (ties to the lower id) into clients.
/// Cross-community edges are dropped; local ids follow ascending original
/// ids.
pub fn make_clients(
    graph: &Graph,
    assignment: &CommunityAssignment,
    k: usize,
    ratios: SplitRatios,
    seed: u64,
) -> Result<Vec<ClientDataset>> {
    if assignment.membership().len() != graph.node_count() {
        return Err(Error::Contract("assignment does not cover the graph".into()));
    }
    if k == 0 || k > assignment.count() {
        return Err(Error::Config(format!(
            "{k} clients requested from {} communities",
            assignment.count()
        )));
    }
    ratios.validate()?;
    let sizes = assignment.sizes();
    let mut ranked: Vec<usize> = (0..assignment.count()).collect();
    ranked.sort_by(|&a, &b| sizes[b].cmp(&sizes[a]).then(a.cmp(&b)));

    ranked
        .into_iter()
        .take(k)
        .enumerate()
        .map(|(id, community)| {
            let nodes: Vec<usize> = (0..graph.node_count())
                .filter(|&v| assignment.community(v) == community)
                .collect();
            let sub = graph.induced_subgraph(&nodes)?;
            let mut r = rng::rng(seed, &[rng::tag::SPLIT, id as u64]);
            let split = split_labeled(&sub, ratios, &mut r)?;
            Ok(ClientDataset {
                id,
                graph: sub,
                split,
                original_ids: nodes,
            })
        })
        .collect()
}
