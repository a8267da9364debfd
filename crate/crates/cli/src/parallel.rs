//! Multi-threaded drivers over the core routines.
//!
//! Results never depend on the number of worker threads: work is split into
//! fixed chunks and partial results are combined in chunk order.

use rayon::prelude::*;
use shellkit_core::eval::{check_pairwise, pairwise_partial, HistogramConfig};
use shellkit_core::{DatasetMatrix, HistogramReport, Result, StackedShellModel};

pub const THREADS_ENV: &str = "SHELLKIT_THREADS";

/// Caps the global pool at `SHELLKIT_THREADS` workers when set.
pub fn init_thread_pool() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v.trim().parse().map_err(|_| anyhow::anyhow!("{THREADS_ENV} must be a positive integer, got {v:?}"))?;
        if n == 0 {
            anyhow::bail!("{THREADS_ENV} must be at least 1");
        }
        // A second initialization (tests) keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

pub fn score_rows(model: &StackedShellModel, data: &DatasetMatrix) -> Result<Vec<f64>> {
    (0..data.n_rows()).into_par_iter().map(|i| model.score(data.row(i)).map_err(|e| e.at_row(i))).collect()
}

/// Per-row scores of every model, `out[m][row]`.
pub fn score_all(models: &[StackedShellModel], data: &DatasetMatrix) -> Result<Vec<Vec<f64>>> {
    models.iter().map(|m| score_rows(m, data)).collect()
}

/// Index of the highest-scoring model per row; ties go to the earliest model.
pub fn classify_rows(models: &[StackedShellModel], data: &DatasetMatrix) -> Result<Vec<usize>> {
    (0..data.n_rows())
        .into_par_iter()
        .map(|i| shellkit_core::learner::classify_index(models, data.row(i)).map_err(|e| e.at_row(i)))
        .collect()
}

/// Pairwise histogram with rows split into chunks of similar pair counts.
pub fn pairwise_histogram(data: &DatasetMatrix, cfg: &HistogramConfig) -> Result<HistogramReport> {
    check_pairwise(data, cfg)?;
    let (lo, hi) = cfg.range.unwrap_or((0.0, 2.1));
    let n = data.n_rows();
    let bounds = pair_balanced_bounds(n, 64);
    let parts: Vec<_> =
        bounds.par_windows(2).map(|w| pairwise_partial(data, w[0]..w[1], cfg.bins, lo, hi)).collect();
    let mut iter = parts.into_iter();
    let mut total = iter.next().expect("at least one chunk");
    for p in iter {
        total.merge(&p);
    }
    Ok(total.finish())
}

/// Chunk boundaries over `0..n` where chunk `[a, b)` owns the pairs `(i, j > i)`
/// for `i` in it; chunks hold roughly equal pair counts.
fn pair_balanced_bounds(n: usize, chunks: usize) -> Vec<usize> {
    let total = n * (n - 1) / 2;
    let per = total.div_ceil(chunks).max(1);
    let mut bounds = vec![0];
    let mut acc = 0;
    for i in 0..n {
        acc += n - 1 - i;
        if acc >= per && i + 1 < n {
            bounds.push(i + 1);
            acc = 0;
        }
    }
    bounds.push(n);
    bounds
}
