//! Data-parallel helpers with a sequential fallback.
//!
//! Every parallel map here collects results in input order, so downstream
//! reductions that fold the collected values left-to-right are bit-identical
//! between the two modes.

/// How per-item work is scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExecMode {
    Sequential,
    /// Uses rayon when the `parallel` feature is enabled, otherwise runs sequentially.
    Parallel,
}

impl Default for ExecMode {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            ExecMode::Parallel
        } else {
            ExecMode::Sequential
        }
    }
}

pub fn map_indexed<T, R, F>(mode: ExecMode, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> R + Sync + Send,
{
    match mode {
        ExecMode::Sequential => items.iter().enumerate().map(|(i, t)| f(i, t)).collect(),
        ExecMode::Parallel => par_map_indexed(items, f),
    }
}

#[cfg(feature = "parallel")]
fn par_map_indexed<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().enumerate().map(|(i, t)| f(i, t)).collect()
}

#[cfg(not(feature = "parallel"))]
fn par_map_indexed<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> R + Sync + Send,
{
    items.iter().enumerate().map(|(i, t)| f(i, t)).collect()
}
