use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{Graph, NodeSplit};
use crate::error::{Error, Result};

/// Fraction of `v`'s neighbors that share its label.
pub fn node_homophily(graph: &Graph, v: usize) -> Result<f64> {
    let own = graph
        .label(v)
        .ok_or_else(|| Error::Contract(format!("node {v} is unlabeled")))?;
    let deg = graph.degree(v);
    if deg == 0 {
        return Err(Error::UndefinedHomophily(v));
    }
    let mut same = 0usize;
    for &u in graph.adjacency().neighbor_ids(v) {
        match graph.label(u) {
            Some(c) if c == own => same += 1,
            Some(_) => {}
            None => {
                return Err(Error::Contract(format!(
                    "neighbor {u} of node {v} is unlabeled"
                )))
            }
        }
    }
    Ok(same as f64 / deg as f64)
}

/// Label set used to pick a client's majority class.
#[derive(Debug, Clone, Copy)]
pub enum MajorityBasis<'a> {
    /// All labeled nodes (how the per-client statistics table is computed).
    AllLabels,
    /// Training nodes only, so evaluation never peeks at held-out labels.
    Train(&'a NodeSplit),
}

/// Per-client class balance and homophily summary.
#[derive(Debug, Clone, PartialEq)]
pub struct ClientStats {
    /// Counts over the basis label set.
    pub class_counts: Vec<usize>,
    pub majority: usize,
    /// Mean homophily per class over labeled nodes with defined homophily.
    pub class_homophily: Vec<Option<f64>>,
    pub majority_homophily: Option<f64>,
    /// `None` when no minority node has defined homophily.
    pub minority_homophily: Option<f64>,
}

impl ClientStats {
    pub fn majority_count(&self) -> usize {
        self.class_counts[self.majority]
    }

    pub fn minority_count(&self) -> usize {
        self.class_counts.iter().sum::<usize>() - self.majority_count()
    }
}

/// Lowest index among the largest counts.
pub(crate) fn argmax_lowest(counts: &[usize]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

/// Counts, majority class and mean homophily for majority vs. other nodes.
///
/// Homophily averages skip nodes where it is undefined: isolated nodes and
/// nodes with an unlabeled neighbor.
pub fn client_stats(graph: &Graph, basis: MajorityBasis<'_>) -> Result<ClientStats> {
    let class_counts = match basis {
        MajorityBasis::AllLabels => graph.class_counts(0..graph.node_count()),
        MajorityBasis::Train(split) => graph.class_counts(split.train.iter().copied()),
    };
    if class_counts.iter().sum::<usize>() == 0 {
        return Err(Error::EmptyInput("no labeled nodes".into()));
    }
    let majority = argmax_lowest(&class_counts);

    let k = graph.num_classes();
    let mut sums = vec![0.0; k];
    let mut counts = vec![0usize; k];
    let (mut maj_sum, mut maj_n, mut min_sum, mut min_n) = (0.0, 0usize, 0.0, 0usize);
    for v in 0..graph.node_count() {
        let Some(c) = graph.label(v) else { continue };
        let h = match node_homophily(graph, v) {
            Ok(h) => h,
            Err(Error::UndefinedHomophily(_)) | Err(Error::Contract(_)) => continue,
            Err(e) => return Err(e),
        };
        sums[c] += h;
        counts[c] += 1;
        if c == majority {
            maj_sum += h;
            maj_n += 1;
        } else {
            min_sum += h;
            min_n += 1;
        }
    }
    let mean = |s: f64, n: usize| (n > 0).then(|| s / n as f64);
    Ok(ClientStats {
        class_counts,
        majority,
        class_homophily: sums.iter().zip(&counts).map(|(&s, &n)| mean(s, n)).collect(),
        majority_homophily: mean(maj_sum, maj_n),
        minority_homophily: mean(min_sum, min_n),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::Matrix;

    fn star(center: usize, leaves: &[usize]) -> Graph {
        let n = leaves.len() + 1;
        let edges: Vec<(usize, usize)> = (1..n).map(|v| (0, v)).collect();
        let mut labels = vec![Some(center)];
        labels.extend(leaves.iter().map(|&c| Some(c)));
        Graph::from_edges(&edges, Matrix::zeros(n, 1), labels, 3).unwrap()
    }

    #[test]
    fn uniform_neighbors_give_one() {
        assert_eq!(node_homophily(&star(1, &[1, 1, 1]), 0).unwrap(), 1.0);
    }

    #[test]
    fn quarter_match() {
        assert_eq!(node_homophily(&star(0, &[0, 1, 2, 1]), 0).unwrap(), 0.25);
    }

    #[test]
    fn isolated_and_unlabeled_cases() {
        let g = Graph::from_edges(
            &[(0, 1)],
            Matrix::zeros(3, 1),
            vec![Some(0), None, Some(0)],
            1,
        )
        .unwrap();
        assert_eq!(node_homophily(&g, 2), Err(Error::UndefinedHomophily(2)));
        assert!(matches!(node_homophily(&g, 0), Err(Error::Contract(_))));
        assert!(matches!(node_homophily(&g, 1), Err(Error::Contract(_))));
    }

    #[test]
    fn single_class_has_no_minority() {
        let s = client_stats(&star(0, &[0, 0]), MajorityBasis::AllLabels).unwrap();
        assert_eq!(s.minority_count(), 0);
        assert_eq!(s.minority_homophily, None);
        assert_eq!(s.majority_homophily, Some(1.0));
    }

    #[test]
    fn two_class_hand_built() {
        // center 0 (class 0) with leaves 0,0,1 -> counts [3,1]
        let s = client_stats(&star(0, &[0, 0, 1]), MajorityBasis::AllLabels).unwrap();
        assert_eq!(s.class_counts, vec![3, 1, 0]);
        assert_eq!(s.majority, 0);
        // center h = 2/3, leaves of class 0 have h = 1
        let expect = (2.0 / 3.0 + 1.0 + 1.0) / 3.0;
        assert!((s.majority_homophily.unwrap() - expect).abs() < 1e-15);
        assert_eq!(s.minority_homophily, Some(0.0));
    }

    #[test]
    fn ties_pick_lowest_class() {
        let s = client_stats(&star(1, &[0]), MajorityBasis::AllLabels).unwrap();
        assert_eq!(s.majority, 0);
    }

    #[test]
    fn no_labels_is_empty_input() {
        let g = Graph::from_edges(&[], Matrix::zeros(2, 1), vec![None, None], 2).unwrap();
        assert!(matches!(
            client_stats(&g, MajorityBasis::AllLabels),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn train_basis_changes_majority() {
        let g = star(0, &[0, 1, 1]);
        let split = NodeSplit::new(vec![2, 3], vec![0], vec![1]);
        let s = client_stats(&g, MajorityBasis::Train(&split)).unwrap();
        assert_eq!(s.majority, 1);
        assert_eq!(s.class_counts, vec![0, 2, 0]);
    }
}
