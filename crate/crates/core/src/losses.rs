//! Training objectives. Every log is taken of a probability floored at
//! [`PROB_FLOOR`], and every term is a mean over its node set.
//!
//! The GNN objective is `CE(y, ŷ)` over training nodes plus
//! `λ1 · KL(p ‖ ŷ)` over all nodes, with the encoder's soft targets `p` as a
//! fixed teacher. The encoder objective is `CE(y, q) + λ2 · KL(ŷ ‖ p)` over
//! training nodes, now with the GNN's predictions `ŷ` as the fixed teacher.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::numcore::{check_stochastic, kl_rows, Matrix, Tape, Var, PROB_FLOOR};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub lambda1: f64,
    pub lambda2: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            lambda1: 5.0,
            lambda2: 1.0,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("lambda1", self.lambda1), ("lambda2", self.lambda2)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!("{name} = {v} must be finite and >= 0")));
            }
        }
        Ok(())
    }
}

/// Mean over rows of `-Σ_c y_c ln ŷ_c` for one-hot (or soft) `targets`.
pub fn cross_entropy(targets: &Matrix, predictions: &Matrix) -> Result<f64> {
    if !targets.same_shape(predictions) {
        return Err(Error::shape(
            "cross_entropy",
            format!("{:?} vs {:?}", targets.shape(), predictions.shape()),
        ));
    }
    if targets.rows() == 0 {
        return Err(Error::EmptyInput("cross-entropy rows".into()));
    }
    check_stochastic(predictions, "cross_entropy prediction")?;
    let total: f64 = targets
        .as_slice()
        .iter()
        .zip(predictions.as_slice())
        .filter(|(&y, _)| y != 0.0)
        .map(|(&y, &p)| -y * libm::log(p.max(PROB_FLOOR)))
        .sum();
    Ok(total / targets.rows() as f64)
}

/// Mean over rows of `KL(teacher ‖ student)`.
pub fn kl_divergence(teacher: &Matrix, student: &Matrix) -> Result<f64> {
    if !teacher.same_shape(student) {
        return Err(Error::shape(
            "kl_divergence",
            format!("{:?} vs {:?}", teacher.shape(), student.shape()),
        ));
    }
    if teacher.rows() == 0 {
        return Err(Error::EmptyInput("kl rows".into()));
    }
    check_stochastic(teacher, "kl teacher")?;
    check_stochastic(student, "kl student")?;
    Ok(kl_rows(teacher, student))
}

/// One-hot rows for `classes` over `num_classes` columns.
pub fn one_hot(classes: &[usize], num_classes: usize) -> Result<Matrix> {
    let mut m = Matrix::zeros(classes.len(), num_classes);
    for (i, &c) in classes.iter().enumerate() {
        if c >= num_classes {
            return Err(Error::Contract(format!("class {c} >= {num_classes}")));
        }
        m.row_mut(i)[c] = 1.0;
    }
    Ok(m)
}

/// GNN objective on the tape.
///
/// `targets` are `(node, class)` pairs for the training nodes. `teacher`
/// must cover every row of `pred`; with `lambda1 == 0` it is ignored and the
/// loss is exactly the cross-entropy node.
pub fn gnn_loss(
    tape: &mut Tape<'_>,
    pred: Var,
    targets: &[(usize, usize)],
    teacher: Option<&Matrix>,
    lambda1: f64,
) -> Result<Var> {
    let ce = tape.cross_entropy(pred, targets)?;
    if lambda1 == 0.0 {
        return Ok(ce);
    }
    let teacher = teacher.ok_or_else(|| Error::Contract("KD term needs a teacher".into()))?;
    if teacher.rows() != tape.value(pred).rows() {
        return Err(Error::Contract(format!(
            "teacher has {} rows for {} nodes",
            teacher.rows(),
            tape.value(pred).rows()
        )));
    }
    let kd = tape.kl_from_teacher(teacher, pred)?;
    let kd = tape.scale(kd, lambda1);
    tape.add(ce, kd)
}

/// Encoder objective on the tape. Row `i` of `q`, `p` and `teacher` all
/// belong to the labeled node with class `classes[i]`.
pub fn encoder_loss(
    tape: &mut Tape<'_>,
    q: Var,
    p: Var,
    classes: &[usize],
    teacher: &Matrix,
    lambda2: f64,
) -> Result<Var> {
    let n = tape.value(q).rows();
    if classes.len() != n || tape.value(p).rows() != n || teacher.rows() != n {
        return Err(Error::Contract(format!(
            "encoder loss needs one label per row: {} labels, q {} rows, p {} rows, teacher {} rows",
            classes.len(),
            n,
            tape.value(p).rows(),
            teacher.rows()
        )));
    }
    let targets: Vec<(usize, usize)> = classes.iter().copied().enumerate().collect();
    let ce = tape.cross_entropy(q, &targets)?;
    if lambda2 == 0.0 {
        return Ok(ce);
    }
    let kd = tape.kl_from_teacher(teacher, p)?;
    let kd = tape.scale(kd, lambda2);
    tape.add(ce, kd)
}

/// Value of [`gnn_loss`] without a tape.
pub fn gnn_loss_value(
    pred: &Matrix,
    targets: &[(usize, usize)],
    teacher: &Matrix,
    lambda1: f64,
) -> Result<f64> {
    let rows: Vec<usize> = targets.iter().map(|t| t.0).collect();
    let classes: Vec<usize> = targets.iter().map(|t| t.1).collect();
    let ce = cross_entropy(&one_hot(&classes, pred.cols())?, &pred.gather_rows(&rows)?)?;
    let kd = if lambda1 == 0.0 {
        0.0
    } else {
        kl_divergence(teacher, pred)?
    };
    Ok(ce + lambda1 * kd)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn probs(rows: &[[f64; 2]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn ce_perfect_and_uniform() {
        let y = one_hot(&[0, 2, 1], 3).unwrap();
        assert!(cross_entropy(&y, &y).unwrap() <= 1e-10);
        let u = Matrix::filled(3, 3, 1.0 / 3.0);
        assert!((cross_entropy(&y, &u).unwrap() - libm::log(3.0)).abs() < 1e-14);
    }

    #[test]
    fn ce_rejects_non_stochastic() {
        let y = one_hot(&[0], 2).unwrap();
        assert!(matches!(
            cross_entropy(&y, &probs(&[[0.7, 0.7]])),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn kl_closed_forms() {
        let a = probs(&[[0.3, 0.7]]);
        assert_eq!(kl_divergence(&a, &a).unwrap(), 0.0);
        let k = kl_divergence(&probs(&[[1.0, 0.0]]), &probs(&[[0.5, 0.5]])).unwrap();
        assert!((k - libm::log(2.0)).abs() < 1e-15);
        let b = probs(&[[0.9, 0.1]]);
        assert!((kl_divergence(&a, &b).unwrap() - kl_divergence(&b, &a).unwrap()).abs() > 1e-3);
    }

    #[test]
    fn zero_lambda_is_pure_ce() {
        let p = probs(&[[0.2, 0.8], [0.6, 0.4]]);
        let mut t1 = Tape::new();
        let v = t1.param(p.clone());
        let l = gnn_loss(&mut t1, v, &[(0, 1)], None, 0.0).unwrap();
        assert_eq!(t1.scalar(l), -libm::log(0.8));

        let mut t2 = Tape::new();
        let q = t2.param(p.clone());
        let pp = t2.param(p.clone());
        let l = encoder_loss(&mut t2, q, pp, &[1, 0], &probs(&[[1.0, 0.0], [0.0, 1.0]]), 0.0)
            .unwrap();
        let want = -(libm::log(0.8) + libm::log(0.6)) / 2.0;
        assert!((t2.scalar(l) - want).abs() < 1e-15);
    }

    #[test]
    fn perfect_agreement_is_zero() {
        let y = one_hot(&[1, 0], 2).unwrap();
        let mut t = Tape::new();
        let v = t.param(y.clone());
        let l = gnn_loss(&mut t, v, &[(0, 1), (1, 0)], Some(&y), 5.0).unwrap();
        assert!(t.scalar(l) <= 1e-10);
        let mut t = Tape::new();
        let q = t.param(y.clone());
        let p = t.param(y.clone());
        let l = encoder_loss(&mut t, q, p, &[1, 0], &y, 1.0).unwrap();
        assert!(t.scalar(l) <= 1e-10);
    }

    #[test]
    fn missing_teacher_rows() {
        let p = probs(&[[0.2, 0.8], [0.6, 0.4]]);
        let mut t = Tape::new();
        let v = t.param(p);
        let short = probs(&[[0.5, 0.5]]);
        assert!(matches!(
            gnn_loss(&mut t, v, &[(0, 1)], Some(&short), 1.0),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn encoder_rows_must_all_be_labeled() {
        let p = probs(&[[0.2, 0.8], [0.6, 0.4]]);
        let mut t = Tape::new();
        let q = t.param(p.clone());
        let pp = t.param(p.clone());
        assert!(matches!(
            encoder_loss(&mut t, q, pp, &[1], &p, 1.0),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn teacher_gets_no_gradient() {
        let teacher = probs(&[[0.3, 0.7], [0.5, 0.5]]);
        let mut t = Tape::new();
        let logits = t.param(Matrix::from_rows(&[[0.1, -0.2], [0.4, 0.0]]).unwrap());
        let pred = t.row_softmax(logits).unwrap();
        let c = t.constant(teacher.clone());
        let l = gnn_loss(&mut t, pred, &[(0, 0)], Some(&teacher), 2.0).unwrap();
        let g = t.backward(l).unwrap();
        assert!(g.get(c).is_none());
        assert!(g.get(logits).is_some());
    }

    #[test]
    fn negative_weight_rejected() {
        let w = LossWeights {
            lambda1: -1.0,
            lambda2: 1.0,
        };
        assert!(w.validate().is_err());
        assert!(LossWeights::default().validate().is_ok());
    }
}
