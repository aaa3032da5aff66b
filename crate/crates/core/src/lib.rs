//! Federated node classification with personalized GNNs regularized by a
//! shared feature-structure encoder and class-wise structure proxies.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, the CLI and
//! thread-pool execution live in the companion `fedgraph` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod datagen;
pub mod error;
pub mod exec;
pub mod fed;
pub mod graph;
pub mod harness;
pub mod losses;
pub mod models;
pub mod numcore;
pub mod partition;
pub mod rng;

pub use error::{Error, Result};
pub use exec::{Executor, Sequential};
pub use graph::{Graph, NodeSplit};
pub use numcore::{Matrix, SparseAdj};
