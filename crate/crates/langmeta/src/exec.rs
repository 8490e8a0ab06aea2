//! Replica fan-out. With the `parallel` feature (default) replicas run on the
//! rayon pool; without it the same code path runs sequentially. Results are
//! collected in replica order either way, so reductions are deterministic.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `f` over replica indices `0..n`, preserving index order.
#[cfg(feature = "parallel")]
pub fn map_replicas<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_replicas<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Sequential variant, always available (benchmark baseline).
pub fn map_replicas_seq<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_matches_sequential() {
        let par = map_replicas(64, |i| i * i);
        let seq = map_replicas_seq(64, |i| i * i);
        assert_eq!(par, seq);
    }
}
