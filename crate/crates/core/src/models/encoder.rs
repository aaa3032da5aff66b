use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::{Linear, ParamSet};
use crate::error::{Error, Result};
use crate::numcore::{Matrix, Tape, Var};
use crate::rng;

/// Global feature-structure encoder: embedding layer, proxy-conditioned
/// classifier and feature-only projector (same shape as the classifier).
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams {
    pub embed: Linear,
    pub classifier: Linear,
    pub projector: Linear,
}

/// Tape handles for an [`EncoderParams`] in tensor order.
#[derive(Debug, Clone, Copy)]
pub struct EncoderVars {
    pub embed: (Var, Var),
    pub classifier: (Var, Var),
    pub projector: (Var, Var),
}

impl EncoderVars {
    pub fn all(&self) -> [Var; 6] {
        [
            self.embed.0,
            self.embed.1,
            self.classifier.0,
            self.classifier.1,
            self.projector.0,
            self.projector.1,
        ]
    }
}

impl EncoderParams {
    pub fn init(d_x: usize, d_s: usize, d_c: usize, rng: &mut rng::Rng) -> Self {
        Self {
            embed: Linear::init(d_x, d_s, rng),
            classifier: Linear::init(d_s, d_c, rng),
            projector: Linear::init(d_s, d_c, rng),
        }
    }

    pub fn embed_dim(&self) -> usize {
        self.embed.out_dim()
    }

    pub fn record(&self, tape: &mut Tape<'_>) -> EncoderVars {
        let mut pair = |l: &Linear| (tape.param(l.w.clone()), tape.param(l.b.clone()));
        EncoderVars {
            embed: pair(&self.embed),
            classifier: pair(&self.classifier),
            projector: pair(&self.projector),
        }
    }

    pub fn embed_tape(tape: &mut Tape<'_>, vars: &EncoderVars, x: Var) -> Result<Var> {
        let h = Linear::apply_tape(tape, x, vars.embed.0, vars.embed.1)?;
        Ok(tape.relu(h))
    }

    pub fn project_tape(tape: &mut Tape<'_>, vars: &EncoderVars, e: Var) -> Result<Var> {
        let z = Linear::apply_tape(tape, e, vars.projector.0, vars.projector.1)?;
        tape.row_softmax(z)
    }

    pub fn classify_tape(
        tape: &mut Tape<'_>,
        vars: &EncoderVars,
        e: Var,
        proxies: Var,
    ) -> Result<Var> {
        let combined = tape.add(e, proxies)?;
        let z = Linear::apply_tape(tape, combined, vars.classifier.0, vars.classifier.1)?;
        tape.row_softmax(z)
    }

    /// Soft targets for every node: labeled nodes (per `labeled`) use their
    /// class proxy, the rest use `q_i · S`.
    pub fn soft_targets(
        &self,
        features: &Matrix,
        proxies: &StructureProxies,
        labels: &[Option<usize>],
        labeled: &[bool],
    ) -> Result<Matrix> {
        let e = encoder_embed(&self.embed, features)?;
        let q = projector_forward(&self.projector, &e)?;
        let s = proxy_lookup(&proxies.s, labels, &q, labeled)?;
        classifier_with_proxy(&self.classifier, &e, &s)
    }
}

impl ParamSet for EncoderParams {
    fn tensors(&self) -> Vec<&Matrix> {
        [&self.embed, &self.classifier, &self.projector]
            .into_iter()
            .flat_map(|l| [&l.w, &l.b])
            .collect()
    }

    fn tensors_mut(&mut self) -> Vec<&mut Matrix> {
        [&mut self.embed, &mut self.classifier, &mut self.projector]
            .into_iter()
            .flat_map(|l| [&mut l.w, &mut l.b])
            .collect()
    }

    fn names(&self) -> Vec<String> {
        ["embed", "classifier", "projector"]
            .into_iter()
            .flat_map(|n| [format!("encoder.{n}.weight"), format!("encoder.{n}.bias")])
            .collect()
    }
}

/// One `d_s`-dimensional proxy row per class.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureProxies {
    pub s: Matrix,
}

impl StructureProxies {
    pub fn zeros(d_c: usize, d_s: usize) -> Self {
        Self {
            s: Matrix::zeros(d_c, d_s),
        }
    }
}

/// `relu(X W_e + b_e)`.
pub fn encoder_embed(embed: &Linear, features: &Matrix) -> Result<Matrix> {
    Ok(embed.apply(features)?.relu())
}

/// `softmax(e W_q + b_q)`.
pub fn projector_forward(projector: &Linear, e: &Matrix) -> Result<Matrix> {
    projector.apply(e)?.row_softmax()
}

/// Per-node proxies: row `S[y_i]` where `labeled[i]`, else `q_i · S`.
pub fn proxy_lookup(
    s: &Matrix,
    labels: &[Option<usize>],
    q: &Matrix,
    labeled: &[bool],
) -> Result<Matrix> {
    let n = q.rows();
    if labels.len() != n || labeled.len() != n || q.cols() != s.rows() {
        return Err(Error::shape(
            "proxy_lookup",
            format!(
                "{} labels, {} mask entries, q {:?}, S {:?}",
                labels.len(),
                labeled.len(),
                q.shape(),
                s.shape()
            ),
        ));
    }
    let mut out = q.matmul(s)?;
    for i in 0..n {
        if !labeled[i] {
            continue;
        }
        let y = labels[i].ok_or_else(|| {
            Error::Contract(format!("node {i} marked labeled but has no label"))
        })?;
        if y >= s.rows() {
            return Err(Error::Contract(format!(
                "label {y} of node {i} outside {} proxies",
                s.rows()
            )));
        }
        out.row_mut(i).copy_from_slice(s.row(y));
    }
    Ok(out)
}

/// `softmax((e + s) W_p + b_p)`.
pub fn classifier_with_proxy(classifier: &Linear, e: &Matrix, proxies: &Matrix) -> Result<Matrix> {
    if !e.same_shape(proxies) {
        return Err(Error::shape(
            "classifier_with_proxy",
            format!("embeddings {:?} vs proxies {:?}", e.shape(), proxies.shape()),
        ));
    }
    classifier.apply(&e.add(proxies)?)?.row_softmax()
}
