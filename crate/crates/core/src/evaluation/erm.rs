//! Statistical k-means: how well does a lightweight coreset of a sample
//! approximate the expected quantization error of the generating
//! distribution?
//!
//! The expected cost `E_P[d(x,Q)²]` and the variance `σ²(P)` are estimated on
//! an independent "truth" sample. For every probe `Q` the report records the
//! normalized error
//!
//! ```text
//! |E_P[d(x,Q)²] - φ_C(Q)/n| / (E_P[d(x,Q)²]/2 + σ²(P)/2)
//! ```
//!
//! and the same quantity for a direct uniform sample of size `m` from `P`.

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::divergence::Divergence;
use crate::error::{Error, Result};
use crate::evaluation::probes::{ProbeConfig, ProbeKind, ProbeSet};
use crate::model::{quantization_error, Dataset, PointSet};
use crate::numeric::chunked_sum;
use crate::rng::{stream, Purpose, StreamRng};
use crate::sampling::{lightweight_coreset, SamplerConfig};

/// A data-generating distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorSpec {
    /// Isotropic Gaussian components with a shared standard deviation.
    /// `std = 0` gives point masses.
    GaussianMixture {
        means: Vec<Vec<f64>>,
        weights: Vec<f64>,
        std: f64,
    },
    /// Standard Gaussian in `dim` dimensions where a `fraction` of the draws
    /// is replaced by contamination at radius `distance` along one of
    /// `clusters` signed coordinate axes, plus unit Gaussian noise. With a
    /// `tail_exponent` α the radius is Pareto distributed,
    /// `distance · U^(-1/α)`, which has a finite fourth moment only for α > 4.
    HeavyTailContaminated {
        dim: usize,
        fraction: f64,
        distance: f64,
        clusters: usize,
        tail_exponent: Option<f64>,
    },
}

impl GeneratorSpec {
    pub fn standard_gaussian(dim: usize) -> Self {
        GeneratorSpec::GaussianMixture {
            means: vec![vec![0.0; dim]],
            weights: vec![1.0],
            std: 1.0,
        }
    }

    pub fn point_mass(at: Vec<f64>) -> Self {
        GeneratorSpec::GaussianMixture {
            means: vec![at],
            weights: vec![1.0],
            std: 0.0,
        }
    }

    /// `fraction` of the mass moved to a single cluster at `distance`.
    pub fn contaminated(dim: usize, fraction: f64, distance: f64) -> Self {
        GeneratorSpec::HeavyTailContaminated {
            dim,
            fraction,
            distance,
            clusters: 1,
            tail_exponent: None,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            GeneratorSpec::GaussianMixture { means, .. } => means.first().map_or(0, Vec::len),
            GeneratorSpec::HeavyTailContaminated { dim, .. } => *dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        match self {
            GeneratorSpec::GaussianMixture {
                means,
                weights,
                std,
            } => {
                let d = self.dim();
                if d == 0 || means.iter().any(|m| m.len() != d) {
                    return bad("mixture means must share a positive dimension".into());
                }
                if weights.len() != means.len()
                    || weights.iter().any(|w| !(*w >= 0.0))
                    || !(weights.iter().sum::<f64>() > 0.0)
                {
                    return bad(
                        "mixture weights must be nonnegative, one per mean, with positive sum"
                            .into(),
                    );
                }
                if !(*std >= 0.0 && std.is_finite()) {
                    return bad(format!("std must be finite and >= 0, got {std}"));
                }
            }
            GeneratorSpec::HeavyTailContaminated {
                dim,
                fraction,
                distance,
                clusters,
                tail_exponent,
            } => {
                if *dim == 0 || *clusters == 0 || *clusters > 2 * dim {
                    return bad("need dim >= 1 and 1 <= clusters <= 2*dim".into());
                }
                if !(0.0..=1.0).contains(fraction) {
                    return bad(format!("contamination fraction {fraction} outside [0, 1]"));
                }
                if !(distance.is_finite() && *distance >= 0.0) {
                    return bad(format!("distance must be finite and >= 0, got {distance}"));
                }
                if let Some(a) = tail_exponent {
                    if !(*a > 0.0) {
                        return bad(format!("tail exponent must be positive, got {a}"));
                    }
                }
            }
        }
        Ok(())
    }

    /// Whether the distribution has a finite fourth moment.
    pub fn finite_fourth_moment(&self) -> bool {
        match self {
            GeneratorSpec::HeavyTailContaminated {
                fraction,
                tail_exponent: Some(a),
                ..
            } => *fraction == 0.0 || *a > 4.0,
            _ => true,
        }
    }

    /// `n` independent draws as a row-major block.
    pub fn sample_flat(&self, n: usize, rng: &mut StreamRng) -> Vec<f64> {
        let d = self.dim();
        let mut out = Vec::with_capacity(n * d);
        match self {
            GeneratorSpec::GaussianMixture {
                means,
                weights,
                std,
            } => {
                let total: f64 = weights.iter().sum();
                for _ in 0..n {
                    let mut u = rng.random::<f64>() * total;
                    let mut c = means.len() - 1;
                    for (j, w) in weights.iter().enumerate() {
                        if u < *w {
                            c = j;
                            break;
                        }
                        u -= w;
                    }
                    for &mu in &means[c] {
                        let z: f64 = StandardNormal.sample(rng);
                        out.push(mu + std * z);
                    }
                }
            }
            GeneratorSpec::HeavyTailContaminated {
                fraction,
                distance,
                clusters,
                tail_exponent,
                ..
            } => {
                let unit = Normal::new(0.0, 1.0).expect("unit normal");
                for _ in 0..n {
                    let start = out.len();
                    out.extend((0..d).map(|_| unit.sample(rng)));
                    if rng.random::<f64>() < *fraction {
                        let c = rng.random_range(0..*clusters);
                        let radius = match tail_exponent {
                            Some(a) => distance * (1.0 - rng.random::<f64>()).powf(-1.0 / a),
                            None => *distance,
                        };
                        let sign = if c % 2 == 0 { 1.0 } else { -1.0 };
                        out[start + c / 2] += sign * radius;
                    }
                }
            }
        }
        out
    }

    pub fn sample(&self, n: usize, rng: &mut StreamRng) -> Result<Dataset> {
        self.validate()?;
        Dataset::from_flat(self.dim(), self.sample_flat(n, rng))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErmConfig {
    pub generator: GeneratorSpec,
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub seed: u64,
    /// Size of the independent sample standing in for `P`.
    pub truth_size: usize,
    pub probes: usize,
    /// `ε` used for the violation fraction.
    pub target_epsilon: f64,
}

impl ErmConfig {
    pub fn new(generator: GeneratorSpec, n: usize, m: usize, k: usize, seed: u64) -> Self {
        Self {
            generator,
            n,
            m,
            k,
            seed,
            truth_size: 1_000_000,
            probes: 200,
            target_epsilon: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErmProbe {
    pub kind: ProbeKind,
    /// Estimate of `E_P[d(x,Q)²]` on the truth sample.
    pub expected_cost: f64,
    /// `φ_C(Q)/n`.
    pub coreset_estimate: f64,
    /// Mean cost over a direct sample of size `m` from `P`.
    pub uniform_estimate: f64,
    pub coreset_margin: f64,
    pub uniform_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErmReport {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub seed: u64,
    pub truth_size: usize,
    pub variance_estimate: f64,
    pub fourth_moment_estimate: f64,
    pub kurtosis_estimate: f64,
    /// False when `P` lacks a finite fourth moment or the estimate is not finite.
    pub kurtosis_reliable: bool,
    /// Largest coreset margin over the probes: the smallest `ε` the probes allow.
    pub coreset_epsilon: f64,
    /// The same for a direct uniform sample of size `m`.
    pub uniform_epsilon: f64,
    pub target_epsilon: f64,
    /// Fraction of probes whose coreset margin exceeds `target_epsilon`.
    pub violation_fraction: f64,
    pub probes: Vec<ErmProbe>,
}

/// Normalized error with the convention `0/0 = 0`.
fn erm_margin(expected: f64, estimate: f64, variance: f64) -> f64 {
    let num = (expected - estimate).abs();
    let den = 0.5 * expected + 0.5 * variance;
    if num == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Variance, fourth moment and kurtosis of `‖x - μ‖` on a sample.
pub(crate) fn moments(truth: &Dataset) -> (f64, f64, f64) {
    let mean = truth.mean();
    let n = truth.n();
    let sq = |i: usize| {
        truth
            .point(i)
            .iter()
            .zip(&mean)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
    };
    let variance = chunked_sum(n, sq) / n as f64;
    let fourth = chunked_sum(n, |i| sq(i).powi(2)) / n as f64;
    (variance, fourth, fourth / (variance * variance))
}

pub fn erm_experiment(cfg: &ErmConfig) -> Result<ErmReport> {
    cfg.generator.validate()?;
    if cfg.n == 0 || cfg.m == 0 || cfg.truth_size == 0 {
        return Err(Error::InvalidParameter(
            "n, m and truth_size must be >= 1".into(),
        ));
    }
    let div = Divergence::squared_euclidean();
    let x = cfg
        .generator
        .sample(cfg.n, &mut stream(cfg.seed, Purpose::Generator, 0))?;
    let truth = cfg.generator.sample(
        cfg.truth_size,
        &mut stream(cfg.seed, Purpose::TruthSample, 0),
    )?;
    let direct = cfg
        .generator
        .sample(cfg.m, &mut stream(cfg.seed, Purpose::DirectSample, 0))?;
    let coreset = lightweight_coreset(&x, &SamplerConfig::new(cfg.m, cfg.seed), &div)?;

    let (variance, fourth, kurtosis) = moments(&truth);
    let set = ProbeSet::generate(
        &x,
        &ProbeConfig::new(cfg.k, cfg.seed).count(cfg.probes),
        &div,
    )?;
    let nf = cfg.n as f64;
    let mf = cfg.m as f64;
    let tf = cfg.truth_size as f64;
    let probes: Vec<ErmProbe> = set
        .probes
        .par_iter()
        .map(|p| {
            let expected = quantization_error(&truth, &p.centers, &div)? / tf;
            let coreset_estimate = quantization_error(&coreset, &p.centers, &div)? / nf;
            let uniform_estimate = quantization_error(&direct, &p.centers, &div)? / mf;
            Ok(ErmProbe {
                kind: p.kind,
                expected_cost: expected,
                coreset_estimate,
                uniform_estimate,
                coreset_margin: erm_margin(expected, coreset_estimate, variance),
                uniform_margin: erm_margin(expected, uniform_estimate, variance),
            })
        })
        .collect::<Result<_>>()?;
    let max = |f: fn(&ErmProbe) -> f64| probes.iter().map(f).fold(0.0, f64::max);
    let violations = probes
        .iter()
        .filter(|p| p.coreset_margin > cfg.target_epsilon)
        .count();
    Ok(ErmReport {
        n: cfg.n,
        m: cfg.m,
        k: cfg.k,
        seed: cfg.seed,
        truth_size: cfg.truth_size,
        variance_estimate: variance,
        fourth_moment_estimate: fourth,
        kurtosis_estimate: kurtosis,
        kurtosis_reliable: cfg.generator.finite_fourth_moment() && kurtosis.is_finite(),
        coreset_epsilon: max(|p| p.coreset_margin),
        uniform_epsilon: max(|p| p.uniform_margin),
        target_epsilon: cfg.target_epsilon,
        violation_fraction: violations as f64 / probes.len() as f64,
        probes,
    })
}
