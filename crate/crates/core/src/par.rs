//! Order-preserving data-parallel helpers.
//!
//! With the `parallel` feature the closures run on the rayon pool; without it they
//! run sequentially. Results are always collected in index order and never reduced
//! in parallel, so floating-point output is bit-identical between the two builds.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Evaluate `f(0..n)` and collect the results in index order.
#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Map over a slice, preserving order.
#[cfg(feature = "parallel")]
pub fn map_slice<S, T, F>(items: &[S], f: F) -> Vec<T>
where
    S: Sync,
    T: Send,
    F: Fn(&S) -> T + Sync + Send,
{
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_slice<S, T, F>(items: &[S], f: F) -> Vec<T>
where
    S: Sync,
    T: Send,
    F: Fn(&S) -> T + Sync + Send,
{
    items.iter().map(f).collect()
}

/// True when this build dispatches onto the rayon pool.
pub const fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}
