//! Trial-level data parallelism.
//!
//! Work items are identified by a `u64` index and mapped independently; the
//! output vector is always in index order, so reductions over it are
//! independent of scheduling and thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExecMode {
    Sequential,
    /// Uses the rayon pool; identical to `Sequential` when the crate is built
    /// without the `parallel` feature.
    #[default]
    Parallel,
}

impl ExecMode {
    /// Whether this mode actually runs on more than the calling thread.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == ExecMode::Parallel
    }
}

/// Maps `f` over `0..count` and collects the results in index order.
pub fn map_indexed<T, F>(mode: ExecMode, count: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if mode.is_parallel() {
        return (0..count).into_par_iter().map(f).collect();
    }
    let _ = mode;
    (0..count).map(f).collect()
}

/// Like [`map_indexed`] but stops at the first error (by index order).
pub fn try_map_indexed<T, E, F>(mode: ExecMode, count: u64, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(u64) -> Result<T, E> + Sync + Send,
{
    map_indexed(mode, count, f).into_iter().collect()
}

/// Maps `f` over a slice, preserving order.
pub fn map_slice<S, T, F>(mode: ExecMode, items: &[S], f: F) -> Vec<T>
where
    S: Sync,
    T: Send,
    F: Fn(&S) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if mode.is_parallel() {
        return items.par_iter().map(f).collect();
    }
    let _ = mode;
    items.iter().map(f).collect()
}
