//! Internal parallel plumbing. `map_slots` is an index-ordered map that
//! produces bit-identical results with and without the `parallel` feature and
//! across thread counts: each slot's value depends only on its index, and the
//! collected vector is ordered by index.

pub(crate) fn map_slots<T, F>(n: usize, parallel: bool, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if parallel {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
    }
    let _ = parallel;
    (0..n).map(f).collect()
}
