//! Data-parallel helpers. With the `parallel` feature the work is spread over
//! rayon's pool; without it the same chunking runs sequentially. Chunk
//! boundaries never depend on the thread count, so reductions are
//! bit-identical either way.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Below this many elements the overhead of splitting outweighs the gain.
pub const MIN_PAR_LEN: usize = 1 << 13;

/// Chunk length used for reductions.
pub const REDUCE_CHUNK: usize = 1 << 12;

pub fn for_each_chunk_mut<T, F>(data: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    let chunk = chunk.max(1);
    #[cfg(feature = "parallel")]
    if data.len() >= MIN_PAR_LEN {
        data.par_chunks_mut(chunk)
            .enumerate()
            .for_each(|(i, c)| f(i * chunk, c));
        return;
    }
    data.chunks_mut(chunk)
        .enumerate()
        .for_each(|(i, c)| f(i * chunk, c));
}

/// Sum `f` over `0..len` in fixed chunks, combining chunk sums left to right.
pub fn sum_f64<F>(len: usize, f: F) -> f64
where
    F: Fn(usize, usize) -> f64 + Sync + Send,
{
    let chunks = len.div_ceil(REDUCE_CHUNK);
    let part = |c: usize| {
        let lo = c * REDUCE_CHUNK;
        f(lo, (lo + REDUCE_CHUNK).min(len))
    };
    #[cfg(feature = "parallel")]
    if len >= MIN_PAR_LEN {
        let parts: Vec<f64> = (0..chunks).into_par_iter().map(part).collect();
        return parts.iter().sum();
    }
    (0..chunks).map(part).collect::<Vec<_>>().iter().sum()
}

/// Map `0..n` to a vector, in parallel when `n` is large enough.
pub fn map_range<R, F>(n: usize, min_par: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if n >= min_par {
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = min_par;
    (0..n).map(f).collect()
}
