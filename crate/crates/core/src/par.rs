//! Data-parallel helpers. With the `parallel` feature these run on the rayon
//! thread pool; without it they are plain sequential loops. Results never
//! depend on the thread layout: maps preserve order and every reduction in
//! the crate sums the mapped values sequentially afterwards.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Minimum number of items per rayon task for per-node maps.
#[cfg(feature = "parallel")]
const MIN_LEN: usize = 1024;

#[cfg(feature = "parallel")]
pub fn map_slice<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    items.par_iter().with_min_len(MIN_LEN).map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_slice<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}

#[cfg(feature = "parallel")]
pub fn map_range<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    (0..n).into_par_iter().with_min_len(MIN_LEN).map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_range<U, F>(n: usize, f: F) -> Vec<U>
where
    F: Fn(usize) -> U,
{
    (0..n).map(f).collect()
}

/// Maps independent, expensive jobs (whole runs of a sweep).
#[cfg(feature = "parallel")]
pub fn map_jobs<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_jobs<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}

/// Applies `f` to every element in place.
#[cfg(feature = "parallel")]
pub fn for_each_mut<T, F>(items: &mut [T], f: F)
where
    T: Send,
    F: Fn(&mut T) + Sync + Send,
{
    items.par_iter_mut().with_min_len(MIN_LEN).for_each(f)
}

#[cfg(not(feature = "parallel"))]
pub fn for_each_mut<T, F>(items: &mut [T], f: F)
where
    F: Fn(&mut T),
{
    items.iter_mut().for_each(f)
}

/// Applies `f(chunk_index, chunk)` to consecutive chunks of length `chunk`.
#[cfg(feature = "parallel")]
pub fn for_each_chunk_mut<T, F>(items: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    items
        .par_chunks_mut(chunk)
        .enumerate()
        .for_each(|(i, c)| f(i, c))
}

#[cfg(not(feature = "parallel"))]
pub fn for_each_chunk_mut<T, F>(items: &mut [T], chunk: usize, f: F)
where
    F: Fn(usize, &mut [T]),
{
    items
        .chunks_mut(chunk)
        .enumerate()
        .for_each(|(i, c)| f(i, c))
}

/// Runs two closures, potentially concurrently.
#[cfg(feature = "parallel")]
pub fn join<A, B, RA, RB>(a: A, b: B) -> (RA, RB)
where
    A: FnOnce() -> RA + Send,
    B: FnOnce() -> RB + Send,
    RA: Send,
    RB: Send,
{
    rayon::join(a, b)
}

#[cfg(not(feature = "parallel"))]
pub fn join<A, B, RA, RB>(a: A, b: B) -> (RA, RB)
where
    A: FnOnce() -> RA,
    B: FnOnce() -> RB,
{
    (a(), b())
}
