use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::numcore::Matrix;

/// Accuracy of one prediction matrix on one node set.
#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub overall: f64,
    /// Accuracy over nodes outside the majority class; `None` when the node
    /// set has none.
    pub minority: Option<f64>,
    /// Accuracy per true class; `None` for classes absent from the set.
    pub per_class: Vec<Option<f64>>,
    pub evaluated: usize,
    pub minority_evaluated: usize,
}

/// Scores argmax predictions (ties to the lowest class) on `nodes`.
pub fn evaluate(
    predictions: &Matrix,
    labels: &[Option<usize>],
    nodes: &[usize],
    majority: usize,
) -> Result<Metrics> {
    if nodes.is_empty() {
        return Err(Error::EmptyInput("evaluation split is empty".into()));
    }
    if labels.len() != predictions.rows() {
        return Err(Error::shape(
            "evaluate",
            format!("{} labels for {} prediction rows", labels.len(), predictions.rows()),
        ));
    }
    let d_c = predictions.cols();
    let mut hits = vec![0usize; d_c];
    let mut totals = vec![0usize; d_c];
    for &v in nodes {
        let y = labels
            .get(v)
            .copied()
            .flatten()
            .ok_or_else(|| Error::Contract(format!("evaluated node {v} has no label")))?;
        if y >= d_c {
            return Err(Error::Contract(format!("label {y} outside {d_c} classes")));
        }
        let row = predictions.row(v);
        let mut best = 0;
        for c in 1..d_c {
            if row[c] > row[best] {
                best = c;
            }
        }
        totals[y] += 1;
        if best == y {
            hits[y] += 1;
        }
    }
    let all_hits: usize = hits.iter().sum();
    let min_total: usize = (0..d_c).filter(|&c| c != majority).map(|c| totals[c]).sum();
    let min_hits: usize = (0..d_c).filter(|&c| c != majority).map(|c| hits[c]).sum();
    Ok(Metrics {
        overall: all_hits as f64 / nodes.len() as f64,
        minority: (min_total > 0).then(|| min_hits as f64 / min_total as f64),
        per_class: hits
            .iter()
            .zip(&totals)
            .map(|(&h, &t)| (t > 0).then(|| h as f64 / t as f64))
            .collect(),
        evaluated: nodes.len(),
        minority_evaluated: min_total,
    })
}
