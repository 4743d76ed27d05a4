//! Coreset constructions.
//!
//! - [`lightweight_coreset`]: importance sampling from the mixture
//!   `q(x) = 1/(2n) + d(x, μ)² / (2 Σ d(x', μ)²)`, two passes over the data.
//! - [`uniform_coreset`]: i.i.d. uniform subsample with weights `n/m`.
//! - [`sensitivity_coreset`]: the sensitivity-sampling baseline built on a
//!   D²-seeded bicriteria solution, `k + 1` passes over the data.
//!
//! Every construction draws `m` points independently with replacement and
//! gives a draw of point `x` the weight `1/(m q(x))`, which makes `φ_C(Q)` an
//! unbiased estimate of `φ_X(Q)` for every fixed `Q`.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::divergence::Divergence;
use crate::error::{Error, Result};
use crate::model::{assign_unchecked, parse_numeric_csv, Coreset, Dataset, PointSet};
use crate::numeric::{chunked_sum, compensated_sum, NeumaierSum};
use crate::rng::{stream, Purpose, StreamRng};
use crate::solver::dsq_seed_with;

/// Average sensitivity bound of the lightweight proposal, for every dataset.
pub const MEAN_SENSITIVITY: f64 = 32.0;

/// A probability distribution over point indices with prefix sums for
/// inverse-CDF sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingDistribution {
    probs: Vec<f64>,
    cumulative: Vec<f64>,
}

impl SamplingDistribution {
    /// Normalizes nonnegative scores into a distribution.
    pub fn from_scores(scores: &[f64]) -> Result<Self> {
        if scores.is_empty() {
            return Err(Error::Empty("distribution over zero points"));
        }
        if let Some(i) = scores.iter().position(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "score {i} is {}",
                scores[i]
            )));
        }
        let total = compensated_sum(scores.iter().copied());
        if !(total > 0.0) {
            return Err(Error::Degenerate("all sampling scores are zero"));
        }
        Ok(Self::from_probs(scores.iter().map(|s| s / total).collect()))
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Empty("distribution over zero points"));
        }
        Ok(Self::from_probs(vec![1.0 / n as f64; n]))
    }

    fn from_probs(probs: Vec<f64>) -> Self {
        let mut acc = NeumaierSum::new();
        let mut cumulative: Vec<f64> = probs
            .iter()
            .map(|&p| {
                acc.add(p);
                acc.value()
            })
            .collect();
        let mut prev = 0.0f64;
        for c in cumulative.iter_mut() {
            *c = c.max(prev).min(1.0);
            prev = *c;
        }
        if let Some(last) = cumulative.last_mut() {
            *last = 1.0;
        }
        Self { probs, cumulative }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, i: usize) -> f64 {
        self.probs[i]
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    /// Index of the first prefix sum exceeding `u ∈ [0, 1)`.
    pub fn index_for(&self, u: f64) -> usize {
        let n = self.probs.len();
        let mut i = self.cumulative.partition_point(|&c| c <= u).min(n - 1);
        while self.probs[i] == 0.0 && i > 0 {
            i -= 1;
        }
        i
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.index_for(rng.random::<f64>())
    }
}

/// Sample count and seed of a construction. `epsilon`, `delta` and `k` only
/// annotate the run: the sample count is always given explicitly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub m: usize,
    pub seed: u64,
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    pub k: Option<usize>,
}

impl SamplerConfig {
    pub fn new(m: usize, seed: u64) -> Self {
        Self {
            m,
            seed,
            epsilon: None,
            delta: None,
            k: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::InvalidParameter(
                "sample count m must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Squared companion-metric distance of every point to the dataset mean.
fn distances_to_mean(x: &Dataset, div: &Divergence) -> Result<Vec<f64>> {
    div.validate_domain(x)?;
    let metric = div.mahalanobis_companion()?.metric;
    if let Some(d) = metric.dim() {
        if d != x.dim() {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: x.dim(),
            });
        }
    }
    let mean = x.mean();
    Ok((0..x.n())
        .into_par_iter()
        .map(|i| metric.eval(x.point(i), &mean))
        .collect())
}

/// The lightweight proposal `q(x) = 1/(2n) + d(x, μ)² / (2 Σ d(x', μ)²)`.
///
/// Distances use the companion Mahalanobis metric of `div`. When every point
/// equals the mean the second component is spread uniformly.
pub fn lwcs_distribution(x: &Dataset, div: &Divergence) -> Result<SamplingDistribution> {
    let dist = distances_to_mean(x, div)?;
    let n = x.n() as f64;
    let total = chunked_sum(dist.len(), |i| dist[i]);
    if total > 0.0 {
        Ok(SamplingDistribution::from_probs(
            dist.iter().map(|&d| 0.5 / n + 0.5 * d / total).collect(),
        ))
    } else {
        SamplingDistribution::uniform(x.n())
    }
}

/// Sensitivity upper bounds `s(x) = 16 d(x, μ)² / (φ({μ})/n) + 16` for all
/// points. Their average is exactly 32; a zero-variance dataset gets 32
/// everywhere.
pub fn sensitivity_bounds(x: &Dataset, div: &Divergence) -> Result<Vec<f64>> {
    let dist = distances_to_mean(x, div)?;
    let n = x.n() as f64;
    let total = chunked_sum(dist.len(), |i| dist[i]);
    if total > 0.0 {
        let avg = total / n;
        Ok(dist.iter().map(|&d| 16.0 * d / avg + 16.0).collect())
    } else {
        Ok(vec![MEAN_SENSITIVITY; x.n()])
    }
}

pub fn point_sensitivity_bound(x: &Dataset, index: usize, div: &Divergence) -> Result<f64> {
    if index >= x.n() {
        return Err(Error::InvalidParameter(format!(
            "point index {index} out of range for {} points",
            x.n()
        )));
    }
    Ok(sensitivity_bounds(x, div)?[index])
}

fn draw_coreset(x: &Dataset, q: &SamplingDistribution, m: usize, rng: &mut StreamRng) -> Coreset {
    let mut out = Coreset::empty(x.dim());
    let mf = m as f64;
    for _ in 0..m {
        let i = q.draw(rng);
        out.push(x.point(i), 1.0 / (mf * q.prob(i)));
    }
    out
}

/// `m` independent draws from `q`, each weighted `1/(m q(x))`. Duplicates
/// stay separate entries.
pub fn importance_sample(
    x: &Dataset,
    q: &SamplingDistribution,
    cfg: &SamplerConfig,
) -> Result<Coreset> {
    cfg.validate()?;
    if q.len() != x.n() {
        return Err(Error::InvalidParameter(format!(
            "distribution covers {} points, dataset has {}",
            q.len(),
            x.n()
        )));
    }
    let mut rng = stream(cfg.seed, Purpose::ImportanceDraws, 0);
    Ok(draw_coreset(x, q, cfg.m, &mut rng))
}

/// Lightweight coreset of size `cfg.m`.
pub fn lightweight_coreset(x: &Dataset, cfg: &SamplerConfig, div: &Divergence) -> Result<Coreset> {
    cfg.validate()?;
    let q = lwcs_distribution(x, div)?;
    importance_sample(x, &q, cfg)
}

/// Uniform subsample with replacement, every weight `n/m`.
pub fn uniform_coreset(x: &Dataset, cfg: &SamplerConfig) -> Result<Coreset> {
    cfg.validate()?;
    let mut rng = stream(cfg.seed, Purpose::UniformDraws, 0);
    let n = x.n();
    let w = n as f64 / cfg.m as f64;
    let mut out = Coreset::empty(x.dim());
    for _ in 0..cfg.m {
        out.push(x.point(rng.random_range(0..n)), w);
    }
    Ok(out)
}

/// Sampling distribution of the sensitivity baseline.
///
/// With `B` a D²-seeded solution, clusters `B_i`, `c̄ = φ_X(B)/n` and
/// `α = 16 (ln k + 2)`:
///
/// ```text
/// s(x) = α d(x,B)/c̄ + 2α Σ_{x'∈B_i} d(x',B) / (|B_i| c̄) + 4n/|B_i|
/// ```
///
/// Falls back to uniform when `c̄ = 0`.
pub fn sensitivity_distribution(
    x: &Dataset,
    k: usize,
    seed: u64,
    div: &Divergence,
) -> Result<SamplingDistribution> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be >= 1".into()));
    }
    let mut rng = stream(seed, Purpose::SensitivitySeeding, 0);
    let b = dsq_seed_with(x, k, &mut rng, div)?;
    let assignment = assign_unchecked(x, &b, div);
    let n = x.n();
    let cost = chunked_sum(n, |i| assignment[i].1);
    let mean_cost = cost / n as f64;
    if !(mean_cost > 0.0) {
        return SamplingDistribution::uniform(n);
    }
    let mut cluster_cost = vec![NeumaierSum::new(); b.len()];
    let mut cluster_size = vec![0usize; b.len()];
    for &(j, d) in &assignment {
        cluster_cost[j].add(d);
        cluster_size[j] += 1;
    }
    let alpha = 16.0 * ((k as f64).ln() + 2.0);
    let nf = n as f64;
    let scores: Vec<f64> = assignment
        .iter()
        .map(|&(j, d)| {
            let size = cluster_size[j] as f64;
            alpha * d / mean_cost
                + 2.0 * alpha * cluster_cost[j].value() / (size * mean_cost)
                + 4.0 * nf / size
        })
        .collect();
    SamplingDistribution::from_scores(&scores)
}

/// Sensitivity-sampling coreset of size `cfg.m` for `k` clusters.
pub fn sensitivity_coreset(
    x: &Dataset,
    cfg: &SamplerConfig,
    k: usize,
    div: &Divergence,
) -> Result<Coreset> {
    cfg.validate()?;
    let q = sensitivity_distribution(x, k, cfg.seed, div)?;
    let mut rng = stream(cfg.seed, Purpose::SensitivityDraws, 0);
    Ok(draw_coreset(x, &q, cfg.m, &mut rng))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoresetMethod {
    Uniform,
    Lwcs,
    Cs,
}

impl CoresetMethod {
    pub const ALL: [CoresetMethod; 3] = [
        CoresetMethod::Uniform,
        CoresetMethod::Lwcs,
        CoresetMethod::Cs,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CoresetMethod::Uniform => "uniform",
            CoresetMethod::Lwcs => "lwcs",
            CoresetMethod::Cs => "cs",
        }
    }

    /// Builds a summary with this method; `k` is only used by `cs`.
    pub fn construct(
        self,
        x: &Dataset,
        cfg: &SamplerConfig,
        k: usize,
        div: &Divergence,
    ) -> Result<Coreset> {
        match self {
            CoresetMethod::Uniform => uniform_coreset(x, cfg),
            CoresetMethod::Lwcs => lightweight_coreset(x, cfg, div),
            CoresetMethod::Cs => sensitivity_coreset(x, cfg, k, div),
        }
    }
}

impl fmt::Display for CoresetMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for CoresetMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(CoresetMethod::Uniform),
            "lwcs" => Ok(CoresetMethod::Lwcs),
            "cs" => Ok(CoresetMethod::Cs),
            other => Err(Error::Config(format!("unknown coreset method '{other}'"))),
        }
    }
}

/// Provenance line of a serialized coreset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoresetHeader {
    pub n: usize,
    pub m: usize,
    pub seed: u64,
}

impl fmt::Display for CoresetHeader {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "# lwcs v1 n={} m={} seed={}", self.n, self.m, self.seed)
    }
}

impl FromStr for CoresetHeader {
    type Err = Error;

    fn from_str(line: &str) -> Result<Self> {
        let bad = || Error::Config(format!("malformed coreset header '{line}'"));
        let rest = line.trim().strip_prefix("# lwcs v1").ok_or_else(bad)?;
        let (mut n, mut m, mut seed) = (None, None, None);
        for tok in rest.split_whitespace() {
            let (key, value) = tok.split_once('=').ok_or_else(bad)?;
            match key {
                "n" => n = value.parse().ok(),
                "m" => m = value.parse().ok(),
                "seed" => seed = value.parse().ok(),
                _ => return Err(bad()),
            }
        }
        Ok(Self {
            n: n.ok_or_else(bad)?,
            m: m.ok_or_else(bad)?,
            seed: seed.ok_or_else(bad)?,
        })
    }
}

/// Writes the header line and one `x_1,...,x_d,weight` row per entry.
pub fn write_coreset<W: Write>(
    mut out: W,
    coreset: &Coreset,
    header: &CoresetHeader,
) -> std::io::Result<()> {
    writeln!(out, "{header}")?;
    let mut line = String::new();
    for (p, w) in coreset.entries() {
        line.clear();
        for v in p {
            line.push_str(&v.to_string());
            line.push(',');
        }
        line.push_str(&w.to_string());
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn save_coreset(
    path: impl AsRef<Path>,
    coreset: &Coreset,
    header: &CoresetHeader,
) -> Result<()> {
    let path = path.as_ref();
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    let mut w = BufWriter::new(file);
    write_coreset(&mut w, coreset, header).map_err(io_err)?;
    w.flush().map_err(io_err)
}

/// True when the file starts with a coreset header line.
pub fn is_coreset_file(path: impl AsRef<Path>) -> Result<bool> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut first = String::new();
    BufReader::new(file)
        .read_line(&mut first)
        .map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
    Ok(first.starts_with("# lwcs v1"))
}

/// Reads a coreset CSV; the header line is optional.
pub fn load_coreset(path: impl AsRef<Path>) -> Result<(Option<CoresetHeader>, Coreset)> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let header = match text.lines().next() {
        Some(l) if l.starts_with("# lwcs") => Some(l.parse()?),
        _ => None,
    };
    let (cols, data) = parse_numeric_csv(text.as_bytes(), path)?;
    if cols < 2 {
        return Err(Error::Format {
            path: path.to_path_buf(),
            message: "coreset rows need at least one coordinate and a weight".into(),
        });
    }
    let dim = cols - 1;
    let rows = data.len() / cols;
    let mut points = Vec::with_capacity(rows * dim);
    let mut weights = Vec::with_capacity(rows);
    for row in data.chunks_exact(cols) {
        points.extend_from_slice(&row[..dim]);
        weights.push(row[dim]);
    }
    Ok((header, Coreset::new(dim, points, weights)?))
}
