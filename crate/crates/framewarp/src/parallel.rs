//! Thin indirection over rayon so the crate builds with a purely sequential
//! fallback when the `parallel` feature is disabled.
//!
//! Every call site maps an index range through a pure function and collects
//! results in index order, so outputs are identical regardless of thread
//! count or feature selection.

#[cfg(feature = "parallel")]
pub(crate) fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}
