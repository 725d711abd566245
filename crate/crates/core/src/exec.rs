//! Index-ordered ensemble execution.

use alloc::vec::Vec;

/// Evaluates `f(0), f(1), …, f(n-1)` and returns the results in index order.
///
/// Implementations may run the closures concurrently, but the returned
/// vector must always be ordered by index so that every downstream
/// reduction is independent of scheduling.
pub trait Executor: Sync {
    fn map_indexed<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// Runs everything on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map_indexed<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..n).map(f).collect()
    }
}

impl<E: Executor + ?Sized> Executor for &E {
    fn map_indexed<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (**self).map_indexed(n, f)
    }
}
