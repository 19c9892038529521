//! Data-parallel map helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) the `map_*` functions fan work out
//! over rayon; without it they run the `*_seq` variants. Both paths produce
//! results in input order, so outputs are bit-identical regardless of the
//! feature or thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map over a slice, in parallel when available.
pub fn map_slice<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_slice_seq(items, f)
    }
}

/// Sequential version of [`map_slice`], always available.
pub fn map_slice_seq<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}

/// Map over `0..n`, in parallel when available.
pub fn map_range<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_range_seq(n, f)
    }
}

/// Sequential version of [`map_range`], always available.
pub fn map_range_seq<U, F>(n: usize, f: F) -> Vec<U>
where
    F: Fn(usize) -> U,
{
    (0..n).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree() {
        let items: Vec<u64> = (0..257).collect();
        let f = |x: &u64| x.wrapping_mul(0x9e37_79b9).rotate_left(13);
        assert_eq!(map_slice(&items, f), map_slice_seq(&items, f));
        let g = |i: usize| (i as f64).sqrt().sin();
        let par = map_range(100, g);
        let seq = map_range_seq(100, g);
        assert!(par.iter().zip(&seq).all(|(a, b)| a.to_bits() == b.to_bits()));
    }
}
