use fedgraph_core::Executor;
use rayon::prelude::*;

use crate::error::{CliError, Result};

/// Runs work items on a dedicated rayon pool. Results come back in input
/// order, so reductions downstream do not depend on the thread count.
pub struct Pool {
    pool: rayon::ThreadPool,
}

impl Pool {
    /// `None` or `Some(0)` lets rayon pick the thread count.
    pub fn new(threads: Option<usize>) -> Result<Self> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads.unwrap_or(0))
            .build()
            .map_err(|e| CliError::Config(format!("cannot start thread pool: {e}")))?;
        Ok(Self { pool })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl Executor for Pool {
    fn map<T, R, F>(&self, items: Vec<T>, f: F) -> Vec<R>
    where
        T: Send,
        R: Send,
        F: Fn(usize, T) -> R + Sync + Send,
    {
        self.pool.install(|| {
            items
                .into_par_iter()
                .enumerate()
                .map(|(i, t)| f(i, t))
                .collect()
        })
    }
}
