//! Data-parallel kernels with a sequential fallback.
//!
//! Every reduction is split into fixed-size chunks whose partial sums are
//! combined in index order, so results are bit-identical whether the
//! `parallel` feature is on, off, or switched at runtime.

use std::sync::atomic::{AtomicBool, Ordering};

/// Elements per reduction chunk.
pub const CHUNK: usize = 4096;

static PARALLEL: AtomicBool = AtomicBool::new(cfg!(feature = "parallel"));

/// Enable or disable parallel execution at runtime. Has no effect without the
/// `parallel` feature.
pub fn set_parallel(on: bool) {
    PARALLEL.store(on && cfg!(feature = "parallel"), Ordering::Relaxed);
}

pub fn is_parallel() -> bool {
    PARALLEL.load(Ordering::Relaxed)
}

/// Deterministic `sum_{i < len} f(i)`.
pub fn sum<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let chunks = len.div_ceil(CHUNK);
    let partial = |c: usize| {
        let lo = c * CHUNK;
        let hi = (lo + CHUNK).min(len);
        (lo..hi).map(&f).sum::<f64>()
    };
    let parts: Vec<f64> = map_range(chunks, partial);
    parts.into_iter().sum()
}

/// Deterministic vector-valued sum: `f(i)` returns `N` values.
pub fn sum_n<const N: usize, F>(len: usize, f: F) -> [f64; N]
where
    F: Fn(usize) -> [f64; N] + Sync,
{
    let chunks = len.div_ceil(CHUNK);
    let partial = |c: usize| {
        let lo = c * CHUNK;
        let hi = (lo + CHUNK).min(len);
        let mut acc = [0.0; N];
        for i in lo..hi {
            let v = f(i);
            for k in 0..N {
                acc[k] += v[k];
            }
        }
        acc
    };
    let parts: Vec<[f64; N]> = map_range(chunks, partial);
    let mut acc = [0.0; N];
    for p in parts {
        for k in 0..N {
            acc[k] += p[k];
        }
    }
    acc
}

/// `(0..len).map(f).collect()`, in parallel when enabled.
pub fn map_range<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    #[cfg(feature = "parallel")]
    if is_parallel() {
        use rayon::prelude::*;
        return (0..len).into_par_iter().map(&f).collect();
    }
    (0..len).map(f).collect()
}

/// Apply `f(index, &mut item)` to every element.
pub fn for_each_mut<T, F>(items: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize, &mut T) + Sync,
{
    #[cfg(feature = "parallel")]
    if is_parallel() && items.len() >= CHUNK {
        use rayon::prelude::*;
        items
            .par_chunks_mut(CHUNK)
            .enumerate()
            .for_each(|(c, chunk)| {
                for (j, x) in chunk.iter_mut().enumerate() {
                    f(c * CHUNK + j, x);
                }
            });
        return;
    }
    for (i, x) in items.iter_mut().enumerate() {
        f(i, x);
    }
}

/// Apply `f(chunk_index, chunk)` to consecutive chunks of length `width`.
pub fn for_each_chunk_mut<T, F>(items: &mut [T], width: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync,
{
    #[cfg(feature = "parallel")]
    if is_parallel() && items.len() / width.max(1) > 1 {
        use rayon::prelude::*;
        items
            .par_chunks_mut(width)
            .enumerate()
            .for_each(|(c, chunk)| f(c, chunk));
        return;
    }
    for (c, chunk) in items.chunks_mut(width).enumerate() {
        f(c, chunk);
    }
}
