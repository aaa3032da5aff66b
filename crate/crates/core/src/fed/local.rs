use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::RoundConfig;
use crate::error::{Error, Result};
use crate::graph::argmax_lowest;
use crate::losses::{encoder_loss, gnn_loss};
use crate::models::{EncoderParams, GnnParams, ParamSet, Propagation, StructureProxies};
use crate::numcore::{AdamState, Matrix, Tape};
use crate::partition::ClientDataset;

/// Read-only per-client data shared by every round.
#[derive(Debug, Clone)]
pub struct ClientContext {
    pub data: ClientDataset,
    pub prop: Propagation,
    /// `(node, class)` for every training node.
    pub train_targets: Vec<(usize, usize)>,
    pub train_mask: Vec<bool>,
    /// Majority class among the training labels (ties to the lowest class).
    pub majority: usize,
    /// Fraction of training nodes per class.
    pub class_ratios: Vec<f64>,
}

impl ClientContext {
    pub fn new(data: ClientDataset) -> Result<Self> {
        data.split.validate(&data.graph)?;
        if data.split.train.is_empty() {
            return Err(Error::EmptyInput(format!(
                "client {} has no training nodes",
                data.id
            )));
        }
        let g = &data.graph;
        let train_targets: Vec<(usize, usize)> = data
            .split
            .train
            .iter()
            .map(|&v| (v, g.label(v).expect("validated split")))
            .collect();
        let counts = g.class_counts(data.split.train.iter().copied());
        let n_train = data.split.train.len() as f64;
        Ok(Self {
            prop: Propagation::new(g),
            train_mask: data.split.train_mask(g.node_count()),
            majority: argmax_lowest(&counts),
            class_ratios: counts.iter().map(|&c| c as f64 / n_train).collect(),
            train_targets,
            data,
        })
    }

    pub fn node_count(&self) -> usize {
        self.data.graph.node_count()
    }

    pub fn features(&self) -> &Matrix {
        self.data.graph.features()
    }

    fn train_classes(&self) -> Vec<usize> {
        self.train_targets.iter().map(|t| t.1).collect()
    }
}

/// Mutable per-client state. The GNN and its optimizer state persist
/// across rounds.
#[derive(Debug, Clone)]
pub struct ClientState {
    pub gnn: GnnParams,
    pub gnn_adam: AdamState,
}

impl ClientState {
    pub fn new(gnn: GnnParams) -> Self {
        let gnn_adam = AdamState::new(gnn.tensors());
        Self { gnn, gnn_adam }
    }

    /// Fresh optimizer state, used when the parameters were just replaced by
    /// a global model.
    pub fn reset_optimizer(&mut self) {
        self.gnn_adam = AdamState::new(self.gnn.tensors());
    }
}

/// Runs `epochs` full-graph Adam steps on the GNN objective. With no teacher
/// (or `lambda1 == 0`) this is plain cross-entropy training. Returns the
/// loss recorded before each step.
pub fn train_gnn(
    ctx: &ClientContext,
    state: &mut ClientState,
    teacher: Option<&Matrix>,
    lambda1: f64,
    epochs: usize,
    lr: f64,
) -> Result<Vec<f64>> {
    let mut losses = Vec::with_capacity(epochs);
    for _ in 0..epochs {
        let mut tape = Tape::new();
        let params = state.gnn.record(&mut tape);
        let x = tape.constant(ctx.features().clone());
        let pred = state.gnn.forward(&mut tape, &params, &ctx.prop, x)?;
        let lambda = if teacher.is_some() { lambda1 } else { 0.0 };
        let loss = gnn_loss(&mut tape, pred, &ctx.train_targets, teacher, lambda)?;
        losses.push(tape.scalar(loss));
        let mut g = tape.backward(loss)?;
        let grads: Vec<Matrix> = params
            .iter()
            .map(|&v| g.take(v).expect("tracked parameter"))
            .collect();
        state.gnn_adam.step(&mut state.gnn.tensors_mut(), &grads, lr)?;
    }
    Ok(losses)
}

/// Phase 1: soft targets from last round's global encoder and proxies are
/// computed once, then the personalized GNN trains against them for `E`
/// epochs. Returns the per-epoch losses.
pub fn phase1_local(
    ctx: &ClientContext,
    state: &mut ClientState,
    encoder: &EncoderParams,
    proxies: &StructureProxies,
    cfg: &RoundConfig,
) -> Result<Vec<f64>> {
    let lambda1 = cfg.weights.lambda1;
    let teacher = if lambda1 == 0.0 {
        None
    } else {
        Some(encoder.soft_targets(
            ctx.features(),
            proxies,
            ctx.data.graph.labels(),
            &ctx.train_mask,
        )?)
    };
    train_gnn(ctx, state, teacher.as_ref(), lambda1, cfg.local_epochs, cfg.lr_gnn)
}

/// Result of phase 2 on one client.
#[derive(Debug, Clone)]
pub struct Phase2Output {
    pub encoder: EncoderParams,
    pub proxies: StructureProxies,
    /// Encoder objective before each epoch's step.
    pub losses: Vec<f64>,
    /// Projector cross-entropy on the training nodes before each step.
    pub projector_ce: Vec<f64>,
}

/// Phase 2: with the GNN's fresh predictions frozen as teacher, trains a
/// copy of the global encoder and one proxy per training node for `E`
/// epochs, then sets each present class's proxy row to the mean of its
/// nodes' proxies.
pub fn phase2_local(
    ctx: &ClientContext,
    state: &ClientState,
    encoder: &EncoderParams,
    proxies: &StructureProxies,
    cfg: &RoundConfig,
) -> Result<Phase2Output> {
    let train = &ctx.data.split.train;
    let classes = ctx.train_classes();
    let teacher = state
        .gnn
        .predict(&ctx.prop, ctx.features())?
        .gather_rows(train)?;
    let x_l = ctx.features().gather_rows(train)?;

    let d_s = proxies.s.cols();
    if d_s != encoder.embed_dim() {
        return Err(Error::shape(
            "phase2_local",
            format!("proxy dim {d_s} vs embedding dim {}", encoder.embed_dim()),
        ));
    }
    let mut node_proxies = proxies.s.gather_rows(&classes)?;
    let mut enc = encoder.clone();
    let mut enc_adam = AdamState::new(enc.tensors());
    let mut proxy_adam = AdamState::new([&node_proxies]);

    let mut losses = Vec::with_capacity(cfg.local_epochs);
    let mut projector_ce = Vec::with_capacity(cfg.local_epochs);
    for _ in 0..cfg.local_epochs {
        let mut tape = Tape::new();
        let vars = enc.record(&mut tape);
        let pv = if cfg.zero_proxies {
            tape.constant(Matrix::zeros(train.len(), d_s))
        } else {
            tape.param(node_proxies.clone())
        };
        let x = tape.constant(x_l.clone());
        let e = EncoderParams::embed_tape(&mut tape, &vars, x)?;
        let q = EncoderParams::project_tape(&mut tape, &vars, e)?;
        let p = EncoderParams::classify_tape(&mut tape, &vars, e, pv)?;
        let ce = crate::losses::cross_entropy(
            &crate::losses::one_hot(&classes, teacher.cols())?,
            tape.value(q),
        )?;
        projector_ce.push(ce);
        let loss = encoder_loss(&mut tape, q, p, &classes, &teacher, cfg.weights.lambda2)?;
        losses.push(tape.scalar(loss));
        let mut g = tape.backward(loss)?;
        let grads: Vec<Matrix> = vars
            .all()
            .iter()
            .map(|&v| g.take(v).expect("tracked parameter"))
            .collect();
        enc_adam.step(&mut enc.tensors_mut(), &grads, cfg.lr_encoder)?;
        if !cfg.zero_proxies {
            let gp = g.take(pv).expect("tracked proxies");
            proxy_adam.step(&mut [&mut node_proxies], &[gp], cfg.lr_proxy)?;
        }
    }

    let mut out = proxies.clone();
    if !cfg.zero_proxies {
        let d_c = out.s.rows();
        let mut sums = Matrix::zeros(d_c, d_s);
        let mut counts = vec![0usize; d_c];
        for (i, &c) in classes.iter().enumerate() {
            for (dst, &v) in sums.row_mut(c).iter_mut().zip(node_proxies.row(i)) {
                *dst += v;
            }
            counts[c] += 1;
        }
        for c in 0..d_c {
            if counts[c] > 0 {
                let inv = counts[c] as f64;
                for (dst, &v) in out.s.row_mut(c).iter_mut().zip(sums.row(c)) {
                    *dst = v / inv;
                }
            }
        }
    }
    Ok(Phase2Output {
        encoder: enc,
        proxies: out,
        losses,
        projector_ce,
    })
}
