//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature the maps run on rayon's pool; without it they
//! are plain iterator loops. Reductions always combine fixed-size chunk
//! results left to right, so floating-point output does not depend on the
//! feature or the thread count.

/// Samples per reduction chunk.
pub const REDUCE_CHUNK: usize = 256;

/// Maps `f` over `items`, preserving order.
pub fn map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Maps `f` over `0..count`, preserving order.
pub fn map_range<U, F>(count: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..count).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..count).map(f).collect()
    }
}

/// Splits `items` into [`REDUCE_CHUNK`]-sized chunks, maps each chunk to a
/// partial result and folds the partials in chunk order.
pub fn chunked_reduce<T, A, M, R>(items: &[T], map_chunk: M, reduce: R) -> Option<A>
where
    T: Sync,
    A: Send,
    M: Fn(usize, &[T]) -> A + Sync + Send,
    R: Fn(A, A) -> A,
{
    let chunks: Vec<(usize, &[T])> = items
        .chunks(REDUCE_CHUNK)
        .enumerate()
        .map(|(i, c)| (i * REDUCE_CHUNK, c))
        .collect();
    let partials = map(&chunks, |(offset, c)| map_chunk(*offset, c));
    partials.into_iter().reduce(reduce)
}

/// Runs `f` on a single worker thread. Without the `parallel` feature this
/// is a direct call.
pub fn serial<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    {
        match rayon::ThreadPoolBuilder::new().num_threads(1).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        f()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduction_order_is_fixed() {
        let xs: Vec<f64> = (0..10_000).map(|i| 1.0 / (1.0 + i as f64)).collect();
        let a = chunked_reduce(&xs, |_, c| c.iter().sum::<f64>(), |a, b| a + b).unwrap();
        let b = serial(|| chunked_reduce(&xs, |_, c| c.iter().sum::<f64>(), |a, b| a + b).unwrap());
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn offsets_cover_input() {
        let xs: Vec<usize> = (0..1000).collect();
        let firsts = chunked_reduce(&xs, |off, c| vec![(off, c[0])], |mut a, b| {
            a.extend(b);
            a
        })
        .unwrap();
        assert!(firsts.iter().all(|(off, first)| off == first));
        assert!(chunked_reduce::<usize, usize, _, _>(&[], |_, _| 0, |a, b| a + b).is_none());
    }

    #[test]
    fn map_preserves_order() {
        let v = map_range(100, |i| i * 2);
        assert_eq!(v, (0..100).map(|i| i * 2).collect::<Vec<_>>());
    }
}
