use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::models::{EncoderParams, ParamSet, StructureProxies};

/// Global state held by the server in a FedSpray run. It carries no GNN
/// parameters: those stay on the clients.
#[derive(Debug, Clone, PartialEq)]
pub struct ServerState {
    pub encoder: EncoderParams,
    pub proxies: StructureProxies,
    /// Node count per client.
    pub counts: Vec<usize>,
    /// `class_ratios[k][j]`: fraction of client `k`'s training nodes in
    /// class `j`.
    pub class_ratios: Vec<Vec<f64>>,
}

/// `Σ_k w_k · x_k` tensor by tensor, accumulated in client order.
pub fn weighted_average<P: ParamSet + Clone>(items: &[P], weights: &[f64]) -> Result<P> {
    let first = items
        .first()
        .ok_or_else(|| Error::EmptyInput("nothing to average".into()))?;
    if weights.len() != items.len() {
        return Err(Error::Contract(format!(
            "{} weights for {} parameter sets",
            weights.len(),
            items.len()
        )));
    }
    let shapes: Vec<(usize, usize)> = first.tensors().iter().map(|t| t.shape()).collect();
    for (k, item) in items.iter().enumerate() {
        let s: Vec<(usize, usize)> = item.tensors().iter().map(|t| t.shape()).collect();
        if s != shapes {
            return Err(Error::Contract(format!(
                "client {k} parameter shapes drifted from client 0"
            )));
        }
    }
    let mut out = first.clone();
    for t in out.tensors_mut() {
        t.as_mut_slice().fill(0.0);
    }
    for (item, &w) in items.iter().zip(weights) {
        if w == 0.0 {
            continue;
        }
        for (dst, src) in out.tensors_mut().into_iter().zip(item.tensors()) {
            dst.axpy(w, src)?;
        }
    }
    Ok(out)
}

/// Node-count weighted average of client encoders.
pub fn aggregate_encoder(encoders: &[EncoderParams], counts: &[usize]) -> Result<EncoderParams> {
    node_weighted(encoders, counts)
}

pub(crate) fn node_weighted<P: ParamSet + Clone>(items: &[P], counts: &[usize]) -> Result<P> {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return Err(Error::EmptyInput("all clients are empty".into()));
    }
    let weights: Vec<f64> = counts.iter().map(|&n| n as f64 / total as f64).collect();
    weighted_average(items, &weights)
}

/// Class-ratio weighted alignment of client proxy rows. Row `j` of the
/// result is `Σ_k (a_j^k / a_j) s_j^k`; when no client has class `j` among
/// its training nodes, `previous`'s row is kept.
pub fn align_proxies(
    previous: &StructureProxies,
    client: &[StructureProxies],
    class_ratios: &[Vec<f64>],
) -> Result<StructureProxies> {
    let (d_c, d_s) = previous.s.shape();
    if client.len() != class_ratios.len() {
        return Err(Error::Contract(format!(
            "{} proxy sets for {} ratio vectors",
            client.len(),
            class_ratios.len()
        )));
    }
    for (k, (c, r)) in client.iter().zip(class_ratios).enumerate() {
        if c.s.shape() != (d_c, d_s) || r.len() != d_c {
            return Err(Error::Contract(format!("client {k} proxy shape drifted")));
        }
    }
    let mut out = previous.clone();
    for j in 0..d_c {
        let a_j: f64 = class_ratios.iter().map(|r| r[j]).sum();
        if a_j == 0.0 {
            continue;
        }
        let row = out.s.row_mut(j);
        row.fill(0.0);
        for (c, r) in client.iter().zip(class_ratios) {
            let w = r[j] / a_j;
            if w == 0.0 {
                continue;
            }
            for (dst, &v) in row.iter_mut().zip(c.s.row(j)) {
                *dst += w * v;
            }
        }
    }
    Ok(out)
}
