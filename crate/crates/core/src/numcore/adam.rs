use alloc::format;
use alloc::vec::Vec;

use super::Matrix;
use crate::error::{Error, Result};

/// Adam moments for an ordered list of parameter tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    first: Vec<Matrix>,
    second: Vec<Matrix>,
}

impl AdamState {
    /// Zero moments shaped like `params`, with β1 = 0.9, β2 = 0.999, ε = 1e-8.
    pub fn new<'a>(params: impl IntoIterator<Item = &'a Matrix>) -> Self {
        let first: Vec<Matrix> = params
            .into_iter()
            .map(|p| Matrix::zeros(p.rows(), p.cols()))
            .collect();
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            second: first.clone(),
            first,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One bias-corrected Adam update applied in place.
    pub fn step(&mut self, params: &mut [&mut Matrix], grads: &[Matrix], lr: f64) -> Result<()> {
        if params.len() != self.first.len() || grads.len() != self.first.len() {
            return Err(Error::shape(
                "adam_step",
                format!(
                    "{} params / {} grads for {} moment buffers",
                    params.len(),
                    grads.len(),
                    self.first.len()
                ),
            ));
        }
        for (k, (p, g)) in params.iter().zip(grads).enumerate() {
            if !p.same_shape(g) || !p.same_shape(&self.first[k]) {
                return Err(Error::shape(
                    "adam_step",
                    format!("tensor {k}: param {:?} grad {:?}", p.shape(), g.shape()),
                ));
            }
        }
        if !(lr >= 0.0) {
            return Err(Error::Config(format!("learning rate {lr} must be >= 0")));
        }
        self.step += 1;
        let t = self.step as f64;
        let c1 = 1.0 - libm::pow(self.beta1, t);
        let c2 = 1.0 - libm::pow(self.beta2, t);
        let (b1, b2, eps) = (self.beta1, self.beta2, self.eps);
        for (k, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            let m = self.first[k].as_mut_slice();
            let v = self.second[k].as_mut_slice();
            for (((pv, &gv), mv), vv) in p
                .as_mut_slice()
                .iter_mut()
                .zip(g.as_slice())
                .zip(m.iter_mut())
                .zip(v.iter_mut())
            {
                *mv = b1 * *mv + (1.0 - b1) * gv;
                *vv = b2 * *vv + (1.0 - b2) * gv * gv;
                let m_hat = *mv / c1;
                let v_hat = *vv / c2;
                *pv -= lr * m_hat / (libm::sqrt(v_hat) + eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params() {
        let mut w = Matrix::from_rows(&[[1.0, -2.0]]).unwrap();
        let before = w.clone();
        let mut st = AdamState::new([&w]);
        st.step(&mut [&mut w], &[Matrix::zeros(1, 2)], 0.1).unwrap();
        assert_eq!(w, before);
        assert_eq!(st.step_count(), 1);
    }

    #[test]
    fn first_step_moves_by_lr_times_sign() {
        let mut w = Matrix::from_rows(&[[1.0, -2.0, 0.5]]).unwrap();
        let g = Matrix::from_rows(&[[3.0, -0.01, 1e3]]).unwrap();
        let mut st = AdamState::new([&w]);
        st.step(&mut [&mut w], &[g], 0.01).unwrap();
        let expect = [0.99, -1.99, 0.49];
        for (a, b) in w.as_slice().iter().zip(expect) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn shape_mismatch_is_error() {
        let mut w = Matrix::zeros(2, 2);
        let mut st = AdamState::new([&w]);
        let r = st.step(&mut [&mut w], &[Matrix::zeros(1, 2)], 0.1);
        assert!(matches!(r, Err(Error::Shape { .. })));
        assert_eq!(st.step_count(), 0);
    }

    #[test]
    fn deterministic_bitwise() {
        let run = || {
            let mut w = Matrix::from_rows(&[[0.3, -0.7]]).unwrap();
            let mut st = AdamState::new([&w]);
            for _ in 0..10 {
                let g = w.scale(2.0);
                st.step(&mut [&mut w], &[g], 0.05).unwrap();
            }
            w
        };
        let (a, b) = (run(), run());
        assert!(a
            .as_slice()
            .iter()
            .zip(b.as_slice())
            .all(|(x, y)| x.to_bits() == y.to_bits()));
    }
}
