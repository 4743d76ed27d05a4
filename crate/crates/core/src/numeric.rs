//! Summation helpers with a reduction order that does not depend on the
//! number of worker threads.
//!
//! Point ranges are cut into fixed-size chunks. Chunks may be processed on any
//! thread, but their partial results are always combined left to right, so a
//! sum over `n` points is bit-identical whether rayon runs one worker or many.

use std::ops::Range;

use rayon::prelude::*;

/// Points per reduction chunk.
pub const CHUNK: usize = 4096;

/// Kahan-Babuska (Neumaier) compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl Extend<f64> for NeumaierSum {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for x in iter {
            self.add(x);
        }
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = NeumaierSum::new();
        s.extend(iter);
        s
    }
}

/// Compensated sum of an iterator.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<NeumaierSum>().value()
}

/// Fixed chunk ranges covering `0..n`.
pub fn chunks(n: usize) -> Vec<Range<usize>> {
    (0..n.div_ceil(CHUNK))
        .map(|c| c * CHUNK..((c + 1) * CHUNK).min(n))
        .collect()
}

/// Sums `f(i)` over `0..n` with per-chunk compensated partials combined in
/// chunk order.
pub fn chunked_sum<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let partials: Vec<f64> = chunks(n)
        .into_par_iter()
        .map(|r| r.map(&f).collect::<NeumaierSum>().value())
        .collect();
    compensated_sum(partials)
}

/// Maps each chunk to a partial result in parallel and folds the partials in
/// chunk order.
pub fn chunked_fold<P, A, M, R>(n: usize, map: M, init: A, mut reduce: R) -> A
where
    P: Send,
    M: Fn(Range<usize>) -> P + Sync,
    R: FnMut(A, P) -> A,
{
    let partials: Vec<P> = chunks(n).into_par_iter().map(&map).collect();
    let mut acc = init;
    for p in partials {
        acc = reduce(acc, p);
    }
    acc
}

/// Sample mean and the standard error of the mean.
pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = compensated_sum(xs.iter().copied()) / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = compensated_sum(xs.iter().map(|x| (x - mean) * (x - mean))) / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Ordinary least-squares slope of `ys` against `xs`.
pub fn ols_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}
