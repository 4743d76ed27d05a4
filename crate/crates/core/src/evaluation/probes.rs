//! Empirical checks of the lightweight coreset property.
//!
//! The property quantifies over every set of at most `k` centers, which can
//! not be checked exhaustively. A [`ProbeSet`] stands in for that quantifier
//! with a fixed mix of center sets, by default in equal parts:
//!
//! - `data_subset`: `k` distinct data points drawn uniformly,
//! - `seeding`: D² seedings of the full data,
//! - `perturbed_solution`: a Lloyd solution of the full data with Gaussian
//!   noise whose scale is log-uniform between 1% and 100% of the
//!   per-coordinate standard deviation,
//! - `far_away`: centers `10⁶` data radii from the mean in random
//!   directions (random corners of the domain box for bounded divergences),
//!   where the additive term of the bound stops helping.
//!
//! The full-data cost of every probe is computed once, so one probe set can
//! score many coresets of the same dataset.

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::divergence::Divergence;
use crate::error::{Error, Result};
use crate::evaluation::margin;
use crate::model::{quantization_error, CenterSet, Coreset, Dataset, PointSet};
use crate::rng::{derive_seed, stream, Purpose};
use crate::solver::{dsq_seed_with, solve_kmeans, SolveConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeKind {
    DataSubset,
    Seeding,
    PerturbedSolution,
    FarAway,
    /// Added by the caller.
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub count: usize,
    pub k: usize,
    pub seed: u64,
}

impl ProbeConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            count: 200,
            k,
            seed,
        }
    }

    pub fn count(mut self, count: usize) -> Self {
        self.count = count;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub kind: ProbeKind,
    pub centers: CenterSet,
    /// `φ_X(Q)` on the dataset the set was built for.
    pub full_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeSet {
    pub probes: Vec<Probe>,
    /// `φ_X({μ})` under the probing divergence.
    pub central_cost: f64,
}

/// Outcome of scoring a coreset against a probe set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub probes: usize,
    pub max_margin: f64,
    pub argmax_probe: usize,
    pub argmax_kind: ProbeKind,
    pub argmax_centers: CenterSet,
    pub max_margin_by_kind: Vec<(ProbeKind, f64)>,
}

impl ProbeSet {
    pub fn generate(x: &Dataset, cfg: &ProbeConfig, div: &Divergence) -> Result<Self> {
        if cfg.count == 0 {
            return Err(Error::InvalidParameter("probe count must be >= 1".into()));
        }
        if cfg.k == 0 {
            return Err(Error::InvalidParameter("k must be >= 1".into()));
        }
        div.validate_domain(x)?;
        let (n, d, k) = (x.n(), x.dim(), cfg.k);
        let mean = x.mean();
        let central_cost = quantization_error(x, &CenterSet::single(&mean)?, div)?;
        let mut rng = stream(cfg.seed, Purpose::Probes, 0);

        let kinds = [
            ProbeKind::DataSubset,
            ProbeKind::Seeding,
            ProbeKind::PerturbedSolution,
            ProbeKind::FarAway,
        ];
        let per_kind: Vec<usize> = (0..4)
            .map(|i| cfg.count / 4 + usize::from(i < cfg.count % 4))
            .collect();

        let spread = (central_cost / (n * d) as f64).sqrt();
        let radius = x
            .rows()
            .map(|p| {
                p.iter()
                    .zip(&mean)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
            .sqrt();
        let far = 1e6 * if radius > 0.0 { radius } else { 1.0 };

        let solution = if per_kind[2] > 0 {
            let solve = SolveConfig::new(k)
                .seed(derive_seed(cfg.seed, Purpose::Probes, 1))
                .max_iters(20);
            Some(solve_kmeans(x, &solve, div)?.centers)
        } else {
            None
        };

        let mut sets = Vec::with_capacity(cfg.count);
        for (kind, &count) in kinds.iter().zip(&per_kind) {
            for _ in 0..count {
                let centers = match kind {
                    ProbeKind::DataSubset => {
                        let idx = sample_indices(&mut rng, n, k.min(n));
                        let mut data = Vec::with_capacity(k * d);
                        for i in idx.iter() {
                            data.extend_from_slice(x.point(i));
                        }
                        CenterSet::from_flat(d, data)?
                    }
                    ProbeKind::Seeding => dsq_seed_with(x, k, &mut rng, div)?,
                    ProbeKind::PerturbedSolution => {
                        let base = solution.as_ref().expect("solution computed when needed");
                        let scale = spread * 10f64.powf(rng.random_range(-2.0..=0.0));
                        let data = base
                            .as_flat()
                            .iter()
                            .map(|&v| {
                                let z: f64 = StandardNormal.sample(&mut rng);
                                clamp_to_domain(div, v + scale * z)
                            })
                            .collect();
                        CenterSet::from_flat(d, data)?
                    }
                    ProbeKind::FarAway => {
                        let mut data = Vec::with_capacity(k * d);
                        for _ in 0..k {
                            match div.domain() {
                                Some(b) => data.extend((0..d).map(|_| {
                                    if rng.random::<bool>() {
                                        b.upper
                                    } else {
                                        b.lower
                                    }
                                })),
                                None => {
                                    let dir: Vec<f64> =
                                        (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
                                    let norm = dir
                                        .iter()
                                        .map(|v| v * v)
                                        .sum::<f64>()
                                        .sqrt()
                                        .max(f64::MIN_POSITIVE);
                                    data.extend(
                                        mean.iter().zip(&dir).map(|(m, u)| m + far * u / norm),
                                    );
                                }
                            }
                        }
                        CenterSet::from_flat(d, data)?
                    }
                    ProbeKind::Explicit => unreachable!("explicit probes are added by push"),
                };
                sets.push((*kind, centers));
            }
        }

        let probes = sets
            .into_par_iter()
            .map(|(kind, centers)| {
                let full_cost = quantization_error(x, &centers, div)?;
                Ok(Probe {
                    kind,
                    centers,
                    full_cost,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            probes,
            central_cost,
        })
    }

    /// Adds a caller-chosen center set.
    pub fn push(&mut self, x: &Dataset, centers: CenterSet, div: &Divergence) -> Result<()> {
        let full_cost = quantization_error(x, &centers, div)?;
        self.probes.push(Probe {
            kind: ProbeKind::Explicit,
            centers,
            full_cost,
        });
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.probes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probes.is_empty()
    }

    /// Margin of `c` at every probe, in probe order.
    pub fn margins(&self, c: &Coreset, div: &Divergence) -> Result<Vec<f64>> {
        self.probes
            .par_iter()
            .map(|p| {
                margin(
                    p.full_cost,
                    quantization_error(c, &p.centers, div)?,
                    self.central_cost,
                )
            })
            .collect()
    }

    pub fn evaluate(&self, c: &Coreset, div: &Divergence) -> Result<PropertyReport> {
        if self.probes.is_empty() {
            return Err(Error::Empty("probe set is empty"));
        }
        let margins = self.margins(c, div)?;
        let mut argmax = 0;
        for (i, &m) in margins.iter().enumerate() {
            if m > margins[argmax] {
                argmax = i;
            }
        }
        let mut by_kind: Vec<(ProbeKind, f64)> = Vec::new();
        for (p, &m) in self.probes.iter().zip(&margins) {
            match by_kind.iter_mut().find(|(k, _)| *k == p.kind) {
                Some(entry) => entry.1 = entry.1.max(m),
                None => by_kind.push((p.kind, m)),
            }
        }
        Ok(PropertyReport {
            probes: self.probes.len(),
            max_margin: margins[argmax],
            argmax_probe: argmax,
            argmax_kind: self.probes[argmax].kind,
            argmax_centers: self.probes[argmax].centers.clone(),
            max_margin_by_kind: by_kind,
        })
    }
}

fn clamp_to_domain(div: &Divergence, v: f64) -> f64 {
    match div.domain() {
        Some(b) => v.clamp(b.lower, b.upper),
        None => v,
    }
}

/// Smallest `ε` consistent with the probes: the largest margin of `c`.
pub fn estimate_required_epsilon(
    x: &Dataset,
    c: &Coreset,
    cfg: &ProbeConfig,
    div: &Divergence,
) -> Result<PropertyReport> {
    ProbeSet::generate(x, cfg, div)?.evaluate(c, div)
}

/// Optimal clustering of a tiny weighted set by enumerating every labeling.
///
/// Only for sets with `k^(n-1) <= 2·10⁷`. Labels whose points carry no weight
/// produce no center, so the result may hold fewer than `k` centers.
pub fn exhaustive_kmeans<S: PointSet + ?Sized>(
    s: &S,
    k: usize,
    div: &Divergence,
) -> Result<(CenterSet, f64)> {
    let n = s.len();
    if n == 0 {
        return Err(Error::Empty("cannot cluster an empty point set"));
    }
    if k == 0 {
        return Err(Error::InvalidParameter("k must be >= 1".into()));
    }
    div.validate_domain(s)?;
    let k = k.min(n);
    let labelings = (k as f64).powi(n as i32 - 1);
    if labelings > 2e7 {
        return Err(Error::InvalidParameter(format!(
            "exhaustive search over {labelings:.0} labelings is too large"
        )));
    }
    let d = s.dim();
    let mut labels = vec![0usize; n];
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut sums = vec![0.0; k * (d + 1)];
    loop {
        sums.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..n {
            let w = s.weight(i);
            let slot = &mut sums[labels[i] * (d + 1)..(labels[i] + 1) * (d + 1)];
            for (a, &v) in slot.iter_mut().zip(s.point(i)) {
                *a += w * v;
            }
            slot[d] += w;
        }
        let mut centers = Vec::with_capacity(k * d);
        let mut slot_of = vec![usize::MAX; k];
        for j in 0..k {
            let slot = &sums[j * (d + 1)..(j + 1) * (d + 1)];
            if slot[d] > 0.0 {
                slot_of[j] = centers.len() / d;
                centers.extend(slot[..d].iter().map(|v| v / slot[d]));
            }
        }
        let mut cost = 0.0;
        for i in 0..n {
            let w = s.weight(i);
            if w > 0.0 {
                let c = slot_of[labels[i]];
                cost += w * div.eval_unchecked(s.point(i), &centers[c * d..(c + 1) * d]);
            }
        }
        if best.as_ref().is_none_or(|b| cost < b.1) {
            best = Some((centers, cost));
        }
        // next labeling, point 0 pinned to label 0
        let mut i = 1;
        while i < n {
            labels[i] += 1;
            if labels[i] < k {
                break;
            }
            labels[i] = 0;
            i += 1;
        }
        if i >= n {
            break;
        }
    }
    let (centers, cost) = best.expect("at least one labeling");
    if centers.is_empty() {
        return Err(Error::Degenerate("all weights are zero"));
    }
    Ok((CenterSet::from_flat(d, centers)?, cost))
}

/// Both sides of the solution-quality bound
/// `φ_X(Q_C) <= φ_X(Q_X) + 4 ε φ_X({μ})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    /// `φ_X` of the solution found on the coreset.
    pub lhs: f64,
    pub rhs: f64,
    /// `φ_X` of the solution found on the full data.
    pub full_cost: f64,
    pub epsilon_hat: f64,
    pub central_cost: f64,
    /// Whether both solutions came from exhaustive search.
    pub exhaustive: bool,
    pub holds: bool,
}

/// Solves on the coreset and on the full data, estimates `ε̂` with a probe
/// set that also contains both solutions, and evaluates both sides of the
/// bound. Sets small enough for [`exhaustive_kmeans`] (at most 12 points) are
/// solved exactly, larger ones with [`solve_kmeans`] under `solve`.
pub fn theorem1_gap(
    x: &Dataset,
    c: &Coreset,
    solve: &SolveConfig,
    probes: &ProbeConfig,
    div: &Divergence,
) -> Result<GapReport> {
    let small = x.n() <= 12 && c.len() <= 12;
    let (q_c, q_x) = if small {
        (
            exhaustive_kmeans(c, solve.k, div)?.0,
            exhaustive_kmeans(x, solve.k, div)?.0,
        )
    } else {
        (
            solve_kmeans(c, solve, div)?.centers,
            solve_kmeans(x, solve, div)?.centers,
        )
    };
    let mut set = ProbeSet::generate(
        x,
        &ProbeConfig {
            k: solve.k,
            ..probes.clone()
        },
        div,
    )?;
    set.push(x, q_c.clone(), div)?;
    set.push(x, q_x.clone(), div)?;
    let epsilon_hat = set.evaluate(c, div)?.max_margin;
    let lhs = quantization_error(x, &q_c, div)?;
    let full_cost = quantization_error(x, &q_x, div)?;
    let rhs = full_cost + 4.0 * epsilon_hat * set.central_cost;
    Ok(GapReport {
        lhs,
        rhs,
        full_cost,
        epsilon_hat,
        central_cost: set.central_cost,
        exhaustive: small,
        holds: lhs <= rhs,
    })
}
