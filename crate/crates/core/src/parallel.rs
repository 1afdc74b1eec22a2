//! Deterministic data-parallel helpers.
//!
//! Summations are chunked with a fixed chunk size and the per-chunk
//! partials are folded in chunk order, so the floating-point result is
//! bit-identical whether the chunks run sequentially or on a rayon pool,
//! and independent of thread count. The `parallel` feature switches which
//! backend the dispatching functions use; the `_seq` variants always exist
//! (the bench suite compares the two directly).

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Fixed chunk size for deterministic reductions.
pub const CHUNK: usize = 32;

/// Sequential chunked sum: same chunking (and therefore the same result
/// bits) as the parallel variant.
pub fn chunked_sum_seq<T, M, F>(items: &[T], zero: M, mut term: F) -> M
where
    M: std::ops::AddAssign<M>,
    F: FnMut(&T) -> M,
{
    let mut total = zero;
    for chunk in items.chunks(CHUNK) {
        let mut it = chunk.iter();
        let first = match it.next() {
            Some(x) => x,
            None => continue,
        };
        let mut partial = term(first);
        for x in it {
            partial += term(x);
        }
        total += partial;
    }
    total
}

/// Parallel chunked sum over a rayon pool; partials are folded in chunk
/// order after collection.
#[cfg(feature = "parallel")]
pub fn chunked_sum_par<T, M, F>(items: &[T], zero: M, term: F) -> M
where
    T: Sync,
    M: std::ops::AddAssign<M> + Send,
    F: Fn(&T) -> M + Sync,
{
    let partials: Vec<M> = items
        .par_chunks(CHUNK)
        .filter_map(|chunk| {
            let mut it = chunk.iter();
            let first = it.next()?;
            let mut partial = term(first);
            for x in it {
                partial += term(x);
            }
            Some(partial)
        })
        .collect();
    let mut total = zero;
    for p in partials {
        total += p;
    }
    total
}

/// Chunked sum using the configured backend.
#[cfg(feature = "parallel")]
pub fn chunked_sum<T, M, F>(items: &[T], zero: M, term: F) -> M
where
    T: Sync,
    M: std::ops::AddAssign<M> + Send,
    F: Fn(&T) -> M + Sync,
{
    chunked_sum_par(items, zero, term)
}

/// Chunked sum using the configured backend.
#[cfg(not(feature = "parallel"))]
pub fn chunked_sum<T, M, F>(items: &[T], zero: M, term: F) -> M
where
    M: std::ops::AddAssign<M>,
    F: FnMut(&T) -> M,
{
    chunked_sum_seq(items, zero, term)
}

/// Order-preserving map: parallel when the feature is on.
#[cfg(feature = "parallel")]
pub fn ordered_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    items.par_iter().map(f).collect()
}

/// Order-preserving map: parallel when the feature is on.
#[cfg(not(feature = "parallel"))]
pub fn ordered_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: FnMut(&T) -> U,
{
    items.iter().map(f).collect()
}
