//! Numeric substrate: dense and sparse matrices, a reverse-mode tape, Adam,
//! and a central-difference gradient checker.

mod adam;
mod gradcheck;
mod matrix;
mod sparse;
mod tape;

pub use adam::AdamState;
pub use gradcheck::finite_diff_check;
pub use matrix::Matrix;
pub use sparse::SparseAdj;
pub use tape::{Gradients, Tape, Var, PROB_FLOOR};


pub(crate) use tape::{check_stochastic, kl_rows};
