//! Deterministic execution helpers.
//!
//! Reductions over the amplitude index space always use the same fixed
//! chunking and the same summation order (chunk-internal sums are sequential,
//! chunk partials are folded in index order), so parallel and sequential
//! builds — and any number of rayon threads — produce bit-identical floating
//! point results.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Fixed chunk length for deterministic reductions.
pub const CHUNK: usize = 1 << 12;

/// Sum `f(i)` over `0..n` with fixed chunking; `T` partials are combined in
/// chunk order regardless of how many threads ran.
pub fn chunked_sum<T, F>(n: usize, f: F) -> T
where
    T: Send + Default + std::ops::AddAssign,
    F: Fn(std::ops::Range<usize>) -> T + Sync,
{
    let n_chunks = n.div_ceil(CHUNK.max(1));
    let partial = |c: usize| {
        let lo = c * CHUNK;
        let hi = (lo + CHUNK).min(n);
        f(lo..hi)
    };
    let partials = map_indexed(n_chunks, partial);
    let mut acc = T::default();
    for p in partials {
        acc += p;
    }
    acc
}

/// Evaluate `f(i)` for `i in 0..n`, collecting results in index order.
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

/// Fill `out` chunk by chunk; `fill(lo, chunk)` writes the values for
/// amplitude indices `lo..lo+chunk.len()`.
#[cfg(feature = "parallel")]
pub fn fill_chunks<T, F>(out: &mut [T], fill: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync,
{
    out.par_chunks_mut(CHUNK)
        .enumerate()
        .for_each(|(c, chunk)| fill(c * CHUNK, chunk));
}

#[cfg(not(feature = "parallel"))]
pub fn fill_chunks<T, F>(out: &mut [T], fill: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync,
{
    for (c, chunk) in out.chunks_mut(CHUNK).enumerate() {
        fill(c * CHUNK, chunk);
    }
}

/// Run `job(j)` for each `j in 0..n` where each job writes to its own
/// disjoint output; order of execution is irrelevant to the result.
#[cfg(feature = "parallel")]
pub fn for_each_job<F>(n: usize, job: F)
where
    F: Fn(usize) + Sync + Send,
{
    (0..n).into_par_iter().for_each(job);
}

#[cfg(not(feature = "parallel"))]
pub fn for_each_job<F>(n: usize, job: F)
where
    F: Fn(usize) + Sync + Send,
{
    for j in 0..n {
        job(j);
    }
}

/// Process `data` in chunks of `len`, one call per chunk with its index.
/// Writes are disjoint, so scheduling cannot affect the result.
#[cfg(feature = "parallel")]
pub fn for_each_chunk_mut<T, F>(data: &mut [T], len: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync,
{
    data.par_chunks_mut(len).enumerate().for_each(|(i, c)| f(i, c));
}

#[cfg(not(feature = "parallel"))]
pub fn for_each_chunk_mut<T, F>(data: &mut [T], len: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync,
{
    for (i, c) in data.chunks_mut(len).enumerate() {
        f(i, c);
    }
}

/// Complex accumulator usable with [`chunked_sum`].
#[derive(Clone, Copy, Default)]
pub struct CSum(pub f64, pub f64);

impl std::ops::AddAssign for CSum {
    fn add_assign(&mut self, rhs: Self) {
        self.0 += rhs.0;
        self.1 += rhs.1;
    }
}
