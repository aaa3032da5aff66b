use alloc::vec::Vec;

/// Strategy for mapping independent work items (clients, trials, sweep cells).
///
/// Implementations must return results in input order; callers rely on that
/// for order-deterministic reductions.
pub trait Executor: Sync {
    fn map<T, R, F>(&self, items: Vec<T>, f: F) -> Vec<R>
    where
        T: Send,
        R: Send,
        F: Fn(usize, T) -> R + Sync + Send;
}

/// Runs everything on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map<T, R, F>(&self, items: Vec<T>, f: F) -> Vec<R>
    where
        T: Send,
        R: Send,
        F: Fn(usize, T) -> R + Sync + Send,
    {
        items.into_iter().enumerate().map(|(i, t)| f(i, t)).collect()
    }
}
