//! Define-by-run reverse-mode differentiation over dense matrices.
//!
//! A [`Tape`] is built fresh for every forward pass. Leaves created with
//! [`Tape::param`] are tracked; [`Tape::constant`] inputs and anything derived
//! only from constants are not, and backward never visits them. Sparse
//! adjacency enters through [`Tape::spmm`] by reference and is always a
//! constant.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{Matrix, SparseAdj};
use crate::error::{Error, Result};

/// Probability floor applied before every logarithm.
pub const PROB_FLOOR: f64 = 1e-12;

/// Handle to a recorded value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

enum Op<'g> {
    Param,
    Constant,
    MatMul(Var, Var),
    Spmm(&'g SparseAdj, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Scale(Var, f64),
    Relu(Var),
    ConcatCols(Var, Var),
    Softmax(Var),
    Transpose(Var),
    GatherRows(Var, Vec<usize>),
    Sum(Var),
    /// Mean over `targets` of `-ln p[row, class]`.
    CrossEntropy(Var, Vec<(usize, usize)>),
    /// Mean over rows of `KL(teacher_row ‖ student_row)`.
    KlFromTeacher(Matrix, Var),
}

struct Node<'g> {
    value: Matrix,
    op: Op<'g>,
    tracked: bool,
}

#[derive(Default)]
pub struct Tape<'g> {
    nodes: Vec<Node<'g>>,
}

/// Gradients indexed by [`Var`].
#[derive(Debug, Clone)]
pub struct Gradients {
    grads: Vec<Option<Matrix>>,
}

impl Gradients {
    /// Gradient of the output w.r.t. `v`, or `None` for untracked values.
    pub fn get(&self, v: Var) -> Option<&Matrix> {
        self.grads.get(v.0).and_then(|g| g.as_ref())
    }

    /// Takes ownership of the gradient for `v`.
    pub fn take(&mut self, v: Var) -> Option<Matrix> {
        self.grads.get_mut(v.0).and_then(|g| g.take())
    }
}

impl<'g> Tape<'g> {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Matrix, op: Op<'g>, tracked: bool) -> Var {
        self.nodes.push(Node { value, op, tracked });
        Var(self.nodes.len() - 1)
    }

    fn tracked(&self, v: Var) -> bool {
        self.nodes[v.0].tracked
    }

    pub fn value(&self, v: Var) -> &Matrix {
        &self.nodes[v.0].value
    }

    /// Scalar value of a `1 × 1` node.
    pub fn scalar(&self, v: Var) -> f64 {
        self.nodes[v.0].value.as_slice()[0]
    }

    /// A differentiable leaf.
    pub fn param(&mut self, value: Matrix) -> Var {
        self.push(value, Op::Param, true)
    }

    pub fn constant(&mut self, value: Matrix) -> Var {
        self.push(value, Op::Constant, false)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let v = self.value(a).matmul(self.value(b))?;
        let t = self.tracked(a) || self.tracked(b);
        Ok(self.push(v, Op::MatMul(a, b), t))
    }

    pub fn spmm(&mut self, adj: &'g SparseAdj, x: Var) -> Result<Var> {
        let v = adj.spmm(self.value(x))?;
        let t = self.tracked(x);
        Ok(self.push(v, Op::Spmm(adj, x), t))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let v = self.value(a).add(self.value(b))?;
        let t = self.tracked(a) || self.tracked(b);
        Ok(self.push(v, Op::Add(a, b), t))
    }

    /// Broadcast-adds the `1 × cols` row `bias` to every row of `a`.
    pub fn add_row(&mut self, a: Var, bias: Var) -> Result<Var> {
        let v = self.value(a).add_row(self.value(bias))?;
        let t = self.tracked(a) || self.tracked(bias);
        Ok(self.push(v, Op::AddRow(a, bias), t))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let v = self.value(a).scale(c);
        let t = self.tracked(a);
        self.push(v, Op::Scale(a, c), t)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let v = self.value(a).relu();
        let t = self.tracked(a);
        self.push(v, Op::Relu(a), t)
    }

    pub fn concat_cols(&mut self, a: Var, b: Var) -> Result<Var> {
        let v = self.value(a).concat_cols(self.value(b))?;
        let t = self.tracked(a) || self.tracked(b);
        Ok(self.push(v, Op::ConcatCols(a, b), t))
    }

    pub fn row_softmax(&mut self, a: Var) -> Result<Var> {
        let v = self.value(a).row_softmax()?;
        let t = self.tracked(a);
        Ok(self.push(v, Op::Softmax(a), t))
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let v = self.value(a).transpose();
        let t = self.tracked(a);
        self.push(v, Op::Transpose(a), t)
    }

    pub fn gather_rows(&mut self, a: Var, rows: &[usize]) -> Result<Var> {
        let v = self.value(a).gather_rows(rows)?;
        let t = self.tracked(a);
        Ok(self.push(v, Op::GatherRows(a, rows.to_vec()), t))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let v = Matrix::filled(1, 1, self.value(a).sum());
        let t = self.tracked(a);
        self.push(v, Op::Sum(a), t)
    }

    /// Mean cross-entropy of row-stochastic `pred` against `(row, class)`
    /// targets, with probabilities floored at [`PROB_FLOOR`].
    pub fn cross_entropy(&mut self, pred: Var, targets: &[(usize, usize)]) -> Result<Var> {
        let p = self.value(pred);
        if targets.is_empty() {
            return Err(Error::EmptyInput("cross-entropy targets".into()));
        }
        check_stochastic(p, "cross_entropy prediction")?;
        let mut total = 0.0;
        for &(r, c) in targets {
            if r >= p.rows() || c >= p.cols() {
                return Err(Error::Contract(format!(
                    "target ({r},{c}) outside prediction {:?}",
                    p.shape()
                )));
            }
            total -= libm::log(p[(r, c)].max(PROB_FLOOR));
        }
        let v = Matrix::filled(1, 1, total / targets.len() as f64);
        let t = self.tracked(pred);
        Ok(self.push(v, Op::CrossEntropy(pred, targets.to_vec()), t))
    }

    /// Mean over rows of `KL(teacher ‖ student)`; the teacher is a constant.
    pub fn kl_from_teacher(&mut self, teacher: &Matrix, student: Var) -> Result<Var> {
        let s = self.value(student);
        if !teacher.same_shape(s) {
            return Err(Error::shape(
                "kl_from_teacher",
                format!("teacher {:?} vs student {:?}", teacher.shape(), s.shape()),
            ));
        }
        if s.rows() == 0 {
            return Err(Error::EmptyInput("kl rows".into()));
        }
        check_stochastic(teacher, "kl teacher")?;
        check_stochastic(s, "kl student")?;
        let v = Matrix::filled(1, 1, kl_rows(teacher, s));
        let t = self.tracked(student);
        Ok(self.push(v, Op::KlFromTeacher(teacher.clone(), student), t))
    }

    /// Reverse sweep from a `1 × 1` output. Every tracked node receives a
    /// gradient buffer (zeros when the output does not depend on it).
    pub fn backward(&self, output: Var) -> Result<Gradients> {
        let out = &self.nodes[output.0].value;
        if out.shape() != (1, 1) {
            return Err(Error::Contract(format!(
                "backward needs a scalar output, got {:?}",
                out.shape()
            )));
        }
        let mut grads: Vec<Option<Matrix>> = vec![None; self.nodes.len()];
        if self.nodes[output.0].tracked {
            grads[output.0] = Some(Matrix::filled(1, 1, 1.0));
        }
        for idx in (0..=output.0).rev() {
            let Some(g) = grads[idx].take() else {
                continue;
            };
            let node = &self.nodes[idx];
            self.propagate(node, &g, &mut grads)?;
            grads[idx] = Some(g);
        }
        for (idx, node) in self.nodes.iter().enumerate() {
            if node.tracked && grads[idx].is_none() {
                let (r, c) = node.value.shape();
                grads[idx] = Some(Matrix::zeros(r, c));
            }
        }
        Ok(Gradients { grads })
    }

    fn propagate(&self, node: &Node<'g>, g: &Matrix, grads: &mut [Option<Matrix>]) -> Result<()> {
        match &node.op {
            Op::Param | Op::Constant => {}
            Op::MatMul(a, b) => {
                if self.tracked(*a) {
                    let ga = g.matmul_t(self.value(*b))?;
                    accumulate(grads, *a, ga)?;
                }
                if self.tracked(*b) {
                    let gb = self.value(*a).t_matmul(g)?;
                    accumulate(grads, *b, gb)?;
                }
            }
            Op::Spmm(adj, x) => {
                if self.tracked(*x) {
                    accumulate(grads, *x, adj.spmm_t(g)?)?;
                }
            }
            Op::Add(a, b) => {
                if self.tracked(*a) {
                    accumulate(grads, *a, g.clone())?;
                }
                if self.tracked(*b) {
                    accumulate(grads, *b, g.clone())?;
                }
            }
            Op::AddRow(a, bias) => {
                if self.tracked(*a) {
                    accumulate(grads, *a, g.clone())?;
                }
                if self.tracked(*bias) {
                    let mut gb = Matrix::zeros(1, g.cols());
                    for i in 0..g.rows() {
                        for (o, &v) in gb.as_mut_slice().iter_mut().zip(g.row(i)) {
                            *o += v;
                        }
                    }
                    accumulate(grads, *bias, gb)?;
                }
            }
            Op::Scale(a, c) => {
                if self.tracked(*a) {
                    accumulate(grads, *a, g.scale(*c))?;
                }
            }
            Op::Relu(a) => {
                if self.tracked(*a) {
                    let x = self.value(*a);
                    let mut ga = g.clone();
                    for (gv, &xv) in ga.as_mut_slice().iter_mut().zip(x.as_slice()) {
                        if xv <= 0.0 {
                            *gv = 0.0;
                        }
                    }
                    accumulate(grads, *a, ga)?;
                }
            }
            Op::ConcatCols(a, b) => {
                let ca = self.value(*a).cols();
                let cb = self.value(*b).cols();
                if self.tracked(*a) {
                    let mut ga = Matrix::zeros(g.rows(), ca);
                    for i in 0..g.rows() {
                        ga.row_mut(i).copy_from_slice(&g.row(i)[..ca]);
                    }
                    accumulate(grads, *a, ga)?;
                }
                if self.tracked(*b) {
                    let mut gb = Matrix::zeros(g.rows(), cb);
                    for i in 0..g.rows() {
                        gb.row_mut(i).copy_from_slice(&g.row(i)[ca..]);
                    }
                    accumulate(grads, *b, gb)?;
                }
            }
            Op::Softmax(a) => {
                if self.tracked(*a) {
                    let y = &node.value;
                    let mut ga = Matrix::zeros(y.rows(), y.cols());
                    for i in 0..y.rows() {
                        let yr = y.row(i);
                        let gr = g.row(i);
                        let inner: f64 = yr.iter().zip(gr).map(|(a, b)| a * b).sum();
                        for ((o, &yv), &gv) in ga.row_mut(i).iter_mut().zip(yr).zip(gr) {
                            *o = yv * (gv - inner);
                        }
                    }
                    accumulate(grads, *a, ga)?;
                }
            }
            Op::Transpose(a) => {
                if self.tracked(*a) {
                    accumulate(grads, *a, g.transpose())?;
                }
            }
            Op::GatherRows(a, rows) => {
                if self.tracked(*a) {
                    let src = self.value(*a);
                    let mut ga = Matrix::zeros(src.rows(), src.cols());
                    for (k, &r) in rows.iter().enumerate() {
                        for (o, &v) in ga.row_mut(r).iter_mut().zip(g.row(k)) {
                            *o += v;
                        }
                    }
                    accumulate(grads, *a, ga)?;
                }
            }
            Op::Sum(a) => {
                if self.tracked(*a) {
                    let (r, c) = self.value(*a).shape();
                    accumulate(grads, *a, Matrix::filled(r, c, g.as_slice()[0]))?;
                }
            }
            Op::CrossEntropy(pred, targets) => {
                if self.tracked(*pred) {
                    let p = self.value(*pred);
                    let mut gp = Matrix::zeros(p.rows(), p.cols());
                    let scale = g.as_slice()[0] / targets.len() as f64;
                    for &(r, c) in targets {
                        let pv = p[(r, c)];
                        if pv >= PROB_FLOOR {
                            gp[(r, c)] -= scale / pv;
                        }
                    }
                    accumulate(grads, *pred, gp)?;
                }
            }
            Op::KlFromTeacher(teacher, student) => {
                if self.tracked(*student) {
                    let s = self.value(*student);
                    let scale = g.as_slice()[0] / s.rows() as f64;
                    let mut gs = Matrix::zeros(s.rows(), s.cols());
                    for ((o, &sv), &tv) in gs
                        .as_mut_slice()
                        .iter_mut()
                        .zip(s.as_slice())
                        .zip(teacher.as_slice())
                    {
                        if sv >= PROB_FLOOR {
                            *o = -scale * tv / sv;
                        }
                    }
                    accumulate(grads, *student, gs)?;
                }
            }
        }
        Ok(())
    }
}

fn accumulate(grads: &mut [Option<Matrix>], v: Var, g: Matrix) -> Result<()> {
    match &mut grads[v.0] {
        Some(existing) => existing.axpy(1.0, &g),
        slot @ None => {
            *slot = Some(g);
            Ok(())
        }
    }
}

pub(crate) fn check_stochastic(m: &Matrix, what: &'static str) -> Result<()> {
    for i in 0..m.rows() {
        let r = m.row(i);
        let total: f64 = r.iter().sum();
        if r.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) || (total - 1.0).abs() > 1e-6 {
            return Err(Error::Contract(format!(
                "{what}: row {i} is not a probability distribution (sum {total})"
            )));
        }
    }
    Ok(())
}

/// Mean over rows of `Σ_c t_c (ln t_c − ln s_c)` with both sides floored.
pub(crate) fn kl_rows(teacher: &Matrix, student: &Matrix) -> f64 {
    let mut total = 0.0;
    for (&t, &s) in teacher.as_slice().iter().zip(student.as_slice()) {
        if t > 0.0 {
            total += t * (libm::log(t.max(PROB_FLOOR)) - libm::log(s.max(PROB_FLOOR)));
        }
    }
    total / teacher.rows() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_form_gradient() {
        let mut tape = Tape::new();
        let x = tape.param(Matrix::from_rows(&[[1.0], [2.0], [3.0]]).unwrap());
        let xt = tape.transpose(x);
        let y = tape.matmul(xt, x).unwrap();
        assert_eq!(tape.scalar(y), 14.0);
        let g = tape.backward(y).unwrap();
        assert_eq!(g.get(x).unwrap().as_slice(), &[2.0, 4.0, 6.0]);
    }

    #[test]
    fn constant_output_gives_zero_gradients() {
        let mut tape = Tape::new();
        let w = tape.param(Matrix::filled(2, 2, 3.0));
        let c = tape.constant(Matrix::filled(2, 2, 1.0));
        let s = tape.sum(c);
        let g = tape.backward(s).unwrap();
        assert_eq!(g.get(w).unwrap(), &Matrix::zeros(2, 2));
        assert!(g.get(c).is_none());
    }

    #[test]
    fn non_scalar_backward_is_contract_error() {
        let mut tape = Tape::new();
        let w = tape.param(Matrix::zeros(2, 2));
        assert!(matches!(tape.backward(w), Err(Error::Contract(_))));
    }

    #[test]
    fn fan_out_accumulates() {
        let mut tape = Tape::new();
        let x = tape.param(Matrix::filled(1, 1, 2.0));
        let y = tape.add(x, x).unwrap();
        let z = tape.sum(y);
        let g = tape.backward(z).unwrap();
        assert_eq!(g.get(x).unwrap().as_slice(), &[2.0]);
    }

    #[test]
    fn cross_entropy_rejects_unnormalized_rows() {
        let mut tape = Tape::new();
        let p = tape.param(Matrix::from_rows(&[[0.7, 0.7]]).unwrap());
        assert!(matches!(
            tape.cross_entropy(p, &[(0, 0)]),
            Err(Error::Contract(_))
        ));
    }
}
