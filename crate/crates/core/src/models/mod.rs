//! Two-layer GNN backbones, the feature-structure encoder and the class-wise
//! structure proxies.

mod encoder;
mod gnn;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng as _;

pub use encoder::{
    classifier_with_proxy, encoder_embed, projector_forward, proxy_lookup, EncoderParams,
    EncoderVars, StructureProxies,
};
pub use gnn::{Backbone, GnnParams, Propagation};

use crate::error::{Error, Result};
use crate::numcore::{Matrix, Tape, Var};
use crate::rng;

/// Affine map `x W + b` with `b` stored as a `1 × out` row.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub w: Matrix,
    pub b: Matrix,
}

impl Linear {
    /// Weights and bias uniform in `±1/√fan_in`.
    pub fn init(fan_in: usize, fan_out: usize, rng: &mut rng::Rng) -> Self {
        let bound = 1.0 / libm::sqrt(fan_in as f64);
        let mut draw = |r: usize, c: usize| {
            let data = (0..r * c)
                .map(|_| rng.random_range(-bound..=bound))
                .collect();
            Matrix::from_vec(r, c, data).expect("sized by construction")
        };
        let w = draw(fan_in, fan_out);
        let b = draw(1, fan_out);
        Self { w, b }
    }

    pub fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Self {
            w: Matrix::zeros(fan_in, fan_out),
            b: Matrix::zeros(1, fan_out),
        }
    }

    pub fn in_dim(&self) -> usize {
        self.w.rows()
    }

    pub fn out_dim(&self) -> usize {
        self.w.cols()
    }

    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        x.matmul(&self.w)?.add_row(&self.b)
    }

    pub(crate) fn apply_tape(tape: &mut Tape<'_>, x: Var, w: Var, b: Var) -> Result<Var> {
        let xw = tape.matmul(x, w)?;
        tape.add_row(xw, b)
    }
}

/// A bundle of named parameter tensors in a fixed order. Aggregation,
/// optimizers and checkpoints all walk this order.
pub trait ParamSet {
    fn tensors(&self) -> Vec<&Matrix>;
    fn tensors_mut(&mut self) -> Vec<&mut Matrix>;
    fn names(&self) -> Vec<String>;

    /// Replaces every tensor from `values`, which must match in count and
    /// shape.
    fn assign(&mut self, values: &[Matrix]) -> Result<()> {
        let mut slots = self.tensors_mut();
        if slots.len() != values.len() {
            return Err(Error::shape(
                "assign",
                format!("{} tensors for {} slots", values.len(), slots.len()),
            ));
        }
        for (k, (dst, src)) in slots.iter_mut().zip(values).enumerate() {
            if !dst.same_shape(src) {
                return Err(Error::shape(
                    "assign",
                    format!("tensor {k}: {:?} vs {:?}", dst.shape(), src.shape()),
                ));
            }
            **dst = src.clone();
        }
        Ok(())
    }

    fn cloned_tensors(&self) -> Vec<Matrix> {
        self.tensors().into_iter().cloned().collect()
    }
}
