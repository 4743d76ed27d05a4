//! Reference implementations used as test oracles. They are deliberately
//! naive and share no code with the library.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Generalized KL divergence `Σ x ln(x/y) - x + y`.
pub fn kl(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * (a / b).ln() - a + b).sum()
}

/// Itakura-Saito divergence `Σ x/y - ln(x/y) - 1`.
pub fn itakura_saito(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| a / b - (a / b).ln() - 1.0)
        .sum()
}

pub fn rows(flat: &[f64], d: usize) -> Vec<Vec<f64>> {
    flat.chunks(d).map(<[f64]>::to_vec).collect()
}

pub fn mean(points: &[Vec<f64>]) -> Vec<f64> {
    let d = points[0].len();
    let mut m = vec![0.0; d];
    for p in points {
        for (a, v) in m.iter_mut().zip(p) {
            *a += v;
        }
    }
    m.iter().map(|v| v / points.len() as f64).collect()
}

/// Weighted cost of `points` against their nearest center.
pub fn cost(
    points: &[Vec<f64>],
    weights: &[f64],
    centers: &[Vec<f64>],
    d: fn(&[f64], &[f64]) -> f64,
) -> f64 {
    points
        .iter()
        .zip(weights)
        .map(|(p, w)| {
            w * centers
                .iter()
                .map(|c| d(p, c))
                .fold(f64::INFINITY, f64::min)
        })
        .sum()
}

pub fn unit_cost(points: &[Vec<f64>], centers: &[Vec<f64>]) -> f64 {
    cost(points, &vec![1.0; points.len()], centers, sq_dist)
}

/// Gaussian blobs with random centers and scales.
pub fn random_blobs(seed: u64, n: usize, d: usize, blobs: usize) -> Vec<f64> {
    let mut r = rng(seed);
    let centers: Vec<Vec<f64>> = (0..blobs)
        .map(|_| (0..d).map(|_| r.random_range(-10.0..10.0)).collect())
        .collect();
    let scales: Vec<f64> = (0..blobs).map(|_| r.random_range(0.1..3.0)).collect();
    let mut out = Vec::with_capacity(n * d);
    for _ in 0..n {
        let b = r.random_range(0..blobs);
        for c in &centers[b] {
            out.push(c + scales[b] * gaussian(&mut r));
        }
    }
    out
}

/// Box-Muller standard normal.
pub fn gaussian<R: Rng>(r: &mut R) -> f64 {
    let u: f64 = 1.0 - r.random::<f64>();
    let v: f64 = r.random();
    (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
}

/// Pearson statistic and its upper-tail p-value.
pub fn chi_squared(observed: &[u64], expected_probs: &[f64]) -> (f64, f64) {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    let total: u64 = observed.iter().sum();
    let stat: f64 = observed
        .iter()
        .zip(expected_probs)
        .map(|(&o, &p)| {
            let e = p * total as f64;
            (o as f64 - e).powi(2) / e
        })
        .sum();
    let dof = (observed.len() - 1) as f64;
    (stat, 1.0 - ChiSquared::new(dof).unwrap().cdf(stat))
}

/// Sample mean and standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}
