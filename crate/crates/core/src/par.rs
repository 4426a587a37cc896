//! Data-parallel helpers.
//!
//! With the `parallel` feature (default) these run on the rayon global pool;
//! without it they fall back to plain sequential iteration. Results are
//! always returned in input order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[cfg(feature = "parallel")]
pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    F: Fn(&T) -> R,
{
    items.iter().map(f).collect()
}

/// Fallible map; returns the first error in input order.
pub fn try_map<T, R, E, F>(items: &[T], f: F) -> Result<Vec<R>, E>
where
    T: Sync,
    R: Send,
    E: Send,
    F: Fn(&T) -> Result<R, E> + Sync + Send,
{
    map(items, f).into_iter().collect()
}

/// Maps each item to an accumulator and combines them with an associative `merge`.
#[cfg(feature = "parallel")]
pub fn fold<T, A, F, M>(items: &[T], identity: A, f: F, merge: M) -> A
where
    T: Sync,
    A: Send + Sync + Clone,
    F: Fn(&T) -> A + Sync + Send,
    M: Fn(A, A) -> A + Sync + Send,
{
    items.par_iter().map(f).reduce(|| identity.clone(), &merge)
}

#[cfg(not(feature = "parallel"))]
pub fn fold<T, A, F, M>(items: &[T], identity: A, f: F, merge: M) -> A
where
    F: Fn(&T) -> A,
    M: Fn(A, A) -> A,
{
    items.iter().map(f).fold(identity, merge)
}

/// Whether the crate was built with the rayon backend.
pub const fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}
