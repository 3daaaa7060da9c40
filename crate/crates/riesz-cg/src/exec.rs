//! Execution kernels for the per-sample loops.
//!
//! Every hot loop in this crate is data-parallel across sample indices:
//! pointwise arithmetic, per-sample eigendecompositions, per-sample direct
//! solves, and grid sups. With the `parallel` feature enabled these run on
//! rayon once the workload crosses a size threshold; otherwise they run as
//! plain loops. Results are bit-identical either way because each sample is
//! computed independently and reductions use `f64::max`/`f64::min`, which are
//! associative and commutative on the finite values this crate allows.
//!
//! The module is public but hidden from docs so the bench suite can pin each
//! kernel to a specific mode and compare.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// How to run a kernel. `Auto` picks based on feature flags and input size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExecMode {
    Auto,
    Sequential,
    #[cfg(feature = "parallel")]
    Parallel,
}

/// Pointwise maps are cheap per element; the bench suite puts the
/// sequential/parallel crossover for a bare multiply near a million
/// elements on a small host.
pub const POINTWISE_PAR_MIN: usize = 1 << 20;

/// Per-sample eigendecompositions and grid sups cost on the order of ten
/// microseconds each; measured break-even sits around a hundred of them.
pub const HEAVY_PAR_MIN: usize = 128;

/// Direct solves plus a scalar CG run are a few microseconds per sample and
/// need a larger batch before the dispatch pays for itself.
pub const ORACLE_PAR_MIN: usize = 1024;

#[cfg(feature = "parallel")]
fn go_parallel(mode: ExecMode, len: usize, threshold: usize) -> bool {
    match mode {
        ExecMode::Auto => len >= threshold,
        ExecMode::Sequential => false,
        ExecMode::Parallel => true,
    }
}

/// Pointwise unary map over sample values.
pub fn map(mode: ExecMode, a: &[f64], f: impl Fn(f64) -> f64 + Sync) -> Vec<f64> {
    #[cfg(feature = "parallel")]
    if go_parallel(mode, a.len(), POINTWISE_PAR_MIN) {
        return a.par_iter().map(|&x| f(x)).collect();
    }
    let _ = mode;
    a.iter().map(|&x| f(x)).collect()
}

/// Pointwise binary map over sample values. Lengths must match.
pub fn zip_map(
    mode: ExecMode,
    a: &[f64],
    b: &[f64],
    f: impl Fn(f64, f64) -> f64 + Sync,
) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    #[cfg(feature = "parallel")]
    if go_parallel(mode, a.len(), POINTWISE_PAR_MIN) {
        return a
            .par_iter()
            .zip(b.par_iter())
            .map(|(&x, &y)| f(x, y))
            .collect();
    }
    let _ = mode;
    a.iter().zip(b.iter()).map(|(&x, &y)| f(x, y)).collect()
}

/// One independent job per index. `par_min` is the batch size at which
/// `Auto` goes parallel; callers pick it to match their per-job cost.
pub fn batch_try<T, F>(
    mode: ExecMode,
    count: usize,
    par_min: usize,
    job: F,
) -> crate::Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> crate::Result<T> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if go_parallel(mode, count, par_min) {
        return (0..count).into_par_iter().map(job).collect();
    }
    let _ = (mode, par_min);
    (0..count).map(job).collect()
}

/// Maximum of a per-index evaluation. `f64::max` keeps the reduction
/// order-independent, so the parallel result matches the sequential one.
pub fn max_by_index(mode: ExecMode, count: usize, f: impl Fn(usize) -> f64 + Sync) -> f64 {
    #[cfg(feature = "parallel")]
    if go_parallel(mode, count, HEAVY_PAR_MIN) {
        return (0..count)
            .into_par_iter()
            .map(&f)
            .reduce(|| f64::NEG_INFINITY, f64::max);
    }
    let _ = mode;
    (0..count).map(f).fold(f64::NEG_INFINITY, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequential_and_auto_agree_bitwise() {
        let a: Vec<f64> = (0..100_000).map(|i| (i as f64).sin()).collect();
        let b: Vec<f64> = (0..100_000).map(|i| (i as f64).cos()).collect();
        let seq = zip_map(ExecMode::Sequential, &a, &b, |x, y| x * y + y);
        let auto = zip_map(ExecMode::Auto, &a, &b, |x, y| x * y + y);
        assert_eq!(seq, auto);
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn parallel_matches_sequential_bitwise() {
        let a: Vec<f64> = (0..50_000).map(|i| 1.0 / (i as f64 + 1.0)).collect();
        let seq = map(ExecMode::Sequential, &a, |x| x.sqrt() * 3.0);
        let par = map(ExecMode::Parallel, &a, |x| x.sqrt() * 3.0);
        assert_eq!(seq, par);

        let ms = max_by_index(ExecMode::Sequential, a.len(), |i| a[i].sin());
        let mp = max_by_index(ExecMode::Parallel, a.len(), |i| a[i].sin());
        assert_eq!(ms.to_bits(), mp.to_bits());
    }
}
