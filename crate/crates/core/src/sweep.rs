//! Batch evaluation over independent points.
//!
//! With the `parallel` feature the batch is spread over the rayon pool;
//! without it the same closures run on the calling thread. Output order always
//! matches input order, so reductions done afterwards are reproducible.

/// Maps `f` over `items` sequentially.
pub fn map_seq<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    F: Fn(&T) -> R,
{
    items.iter().map(f).collect()
}

/// Maps `f` over `items` on the rayon pool, preserving order.
#[cfg(feature = "parallel")]
pub fn map_par<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

/// Maps with whichever backend the crate was built with.
#[cfg(feature = "parallel")]
pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    map_par(items, f)
}

#[cfg(not(feature = "parallel"))]
pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    map_seq(items, f)
}

/// Maximum of a fallible per-item residual; the first error wins in input order.
pub fn max_residual<T, E, F>(items: &[T], f: F) -> Result<f64, E>
where
    T: Sync,
    E: Send,
    F: Fn(&T) -> Result<f64, E> + Sync + Send,
{
    let mut worst: f64 = 0.0;
    for r in map(items, f) {
        let r = r?;
        // NaN must not slip through a max.
        worst = if r.is_nan() { f64::NAN } else { worst.max(r) };
        if worst.is_nan() {
            break;
        }
    }
    Ok(worst)
}
