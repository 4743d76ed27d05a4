//! Two-round distributed construction of a lightweight coreset.
//!
//! Machines hold disjoint partitions `X_i`. In round one each machine reports
//! `|X_i|`, the coordinate sums `U_i` and the squared coordinate sums `V_i`.
//! The coordinator derives the global mean `μ` and every partition's cost
//! against it, `φ_{X_i}({μ}) = Σ_j V_ij - 2 μ_j U_ij + |X_i| μ_j²`, then
//! allocates the `m` draws one at a time: with probability 1/2 a machine is
//! picked proportionally to `|X_i|` and its uniform count `u_i` grows,
//! otherwise proportionally to `φ_{X_i}({μ})` and its count `v_i` grows. In
//! round two every machine draws `u_i` points uniformly and `v_i` points
//! proportionally to `d(x, μ)²`, weighting each draw with the *global*
//! proposal `q(x)`. Per draw, a point is therefore selected with exactly the
//! single-machine probability `q(x)`.
//!
//! Machines are simulated in-process and exchange messages through a
//! [`Mailbox`]; workers of one round run concurrently on rayon.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::divergence::{squared_euclidean, Divergence, Metric};
use crate::error::{Error, Result};
use crate::model::{column_sums, Coreset, Dataset, PointSet};
use crate::numeric::{compensated_sum, NeumaierSum};
use crate::rng::{stream, Purpose};
use crate::sampling::SamplingDistribution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionStrategy {
    /// Point `i` goes to machine `i mod p`.
    RoundRobin,
    /// Machine `i` gets the `i`-th contiguous block of rows.
    Contiguous,
}

impl fmt::Display for PartitionStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PartitionStrategy::RoundRobin => "round_robin",
            PartitionStrategy::Contiguous => "contiguous",
        })
    }
}

impl FromStr for PartitionStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "round_robin" => Ok(PartitionStrategy::RoundRobin),
            "contiguous" => Ok(PartitionStrategy::Contiguous),
            other => Err(Error::Config(format!(
                "unknown partitioning strategy '{other}'"
            ))),
        }
    }
}

/// The points held by one machine, possibly none.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub machine_id: usize,
    dim: usize,
    data: Vec<f64>,
    /// Row of each point in the original dataset.
    source: Vec<usize>,
}

impl Partition {
    pub fn new(machine_id: usize, dim: usize, data: Vec<f64>, source: Vec<usize>) -> Result<Self> {
        if dim == 0 || data.len() != source.len() * dim {
            return Err(Error::DimensionMismatch {
                expected: source.len() * dim,
                got: data.len(),
            });
        }
        Ok(Self {
            machine_id,
            dim,
            data,
            source,
        })
    }

    /// Row of point `i` in the original dataset.
    pub fn source(&self, i: usize) -> usize {
        self.source[i]
    }
}

impl PointSet for Partition {
    fn len(&self) -> usize {
        self.source.len()
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    fn weight(&self, _i: usize) -> f64 {
        1.0
    }
}

/// Splits `x` across `p` machines.
pub fn partition_dataset(
    x: &Dataset,
    p: usize,
    strategy: PartitionStrategy,
) -> Result<Vec<Partition>> {
    if p == 0 {
        return Err(Error::InvalidParameter(
            "need at least one partition".into(),
        ));
    }
    let n = x.n();
    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); p];
    match strategy {
        PartitionStrategy::RoundRobin => (0..n).for_each(|i| rows[i % p].push(i)),
        PartitionStrategy::Contiguous => {
            let (base, extra) = (n / p, n % p);
            let mut start = 0;
            for (m, r) in rows.iter_mut().enumerate() {
                let len = base + usize::from(m < extra);
                r.extend(start..start + len);
                start += len;
            }
        }
    }
    rows.into_iter()
        .enumerate()
        .map(|(id, idx)| {
            let mut data = Vec::with_capacity(idx.len() * x.dim());
            for &i in &idx {
                data.extend_from_slice(x.point(i));
            }
            Partition::new(id, x.dim(), data, idx)
        })
        .collect()
}

/// Round-one message: count, coordinate sums `U_i` and squared sums `V_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionSummary {
    pub machine_id: usize,
    pub count: usize,
    pub coord_sums: Vec<f64>,
    pub coord_sq_sums: Vec<f64>,
}

pub fn summarize_partition(p: &Partition) -> PartitionSummary {
    let squares: Vec<f64> = p.data.iter().map(|v| v * v).collect();
    PartitionSummary {
        machine_id: p.machine_id,
        count: p.len(),
        coord_sums: column_sums(&p.data, p.dim),
        coord_sq_sums: column_sums(&squares, p.dim),
    }
}

/// What the coordinator knows after round one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalStats {
    pub n: usize,
    pub mean: Vec<f64>,
    /// `φ_{X_i}({μ})` in summary order.
    pub per_partition_central_cost: Vec<f64>,
    pub per_partition_count: Vec<usize>,
    pub total_central_cost: f64,
    /// Scale `s` of the companion metric `s·I` the costs are measured in.
    pub metric_scale: f64,
}

impl GlobalStats {
    /// Global proposal probability of a point.
    pub fn proposal(&self, x: &[f64]) -> f64 {
        let n = self.n as f64;
        if self.total_central_cost > 0.0 {
            0.5 / n + 0.5 * self.distance_to_mean(x) / self.total_central_cost
        } else {
            1.0 / n
        }
    }

    pub fn distance_to_mean(&self, x: &[f64]) -> f64 {
        self.metric_scale * squared_euclidean(x, &self.mean)
    }
}

/// Squared-Euclidean global statistics from round-one summaries.
pub fn merge_summaries(summaries: &[PartitionSummary]) -> Result<GlobalStats> {
    merge_summaries_scaled(summaries, 1.0)
}

/// Global statistics with costs measured in the metric `scale · I`.
pub fn merge_summaries_scaled(summaries: &[PartitionSummary], scale: f64) -> Result<GlobalStats> {
    let dim = summaries
        .first()
        .map(|s| s.coord_sums.len())
        .ok_or(Error::Empty("no partition summaries"))?;
    for s in summaries {
        for got in [s.coord_sums.len(), s.coord_sq_sums.len()] {
            if got != dim {
                return Err(Error::DimensionMismatch { expected: dim, got });
            }
        }
    }
    let n: usize = summaries.iter().map(|s| s.count).sum();
    if n == 0 {
        return Err(Error::Empty("every partition is empty"));
    }
    let mean: Vec<f64> = (0..dim)
        .map(|j| compensated_sum(summaries.iter().map(|s| s.coord_sums[j])) / n as f64)
        .collect();
    let per_partition_central_cost: Vec<f64> = summaries
        .iter()
        .map(|s| {
            let c = s.count as f64;
            let mut acc = NeumaierSum::new();
            for (j, &mu) in mean.iter().enumerate() {
                acc.add(s.coord_sq_sums[j]);
                acc.add(-2.0 * mu * s.coord_sums[j]);
                acc.add(c * mu * mu);
            }
            (scale * acc.value()).max(0.0)
        })
        .collect();
    Ok(GlobalStats {
        n,
        mean,
        total_central_cost: compensated_sum(per_partition_central_cost.iter().copied()),
        per_partition_central_cost,
        per_partition_count: summaries.iter().map(|s| s.count).collect(),
        metric_scale: scale,
    })
}

/// Draw counts per machine: `u_i` uniform draws and `v_i` distance-weighted ones.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleAllocation {
    pub uniform_counts: Vec<usize>,
    pub nonuniform_counts: Vec<usize>,
}

impl SampleAllocation {
    pub fn total(&self) -> usize {
        self.uniform_counts.iter().sum::<usize>() + self.nonuniform_counts.iter().sum::<usize>()
    }
}

/// Coordinator loop: `m` independent two-stage machine draws.
///
/// When every partition has zero cost the distance branch also picks
/// machines by size.
pub fn allocate_samples(g: &GlobalStats, m: usize, seed: u64) -> Result<SampleAllocation> {
    if m == 0 {
        return Err(Error::InvalidParameter(
            "sample count m must be >= 1".into(),
        ));
    }
    let sizes: Vec<f64> = g.per_partition_count.iter().map(|&c| c as f64).collect();
    let by_size = SamplingDistribution::from_scores(&sizes)?;
    let by_cost = if g.total_central_cost > 0.0 {
        SamplingDistribution::from_scores(&g.per_partition_central_cost)?
    } else {
        by_size.clone()
    };
    let p = sizes.len();
    let mut alloc = SampleAllocation {
        uniform_counts: vec![0; p],
        nonuniform_counts: vec![0; p],
    };
    let mut rng = stream(seed, Purpose::Allocation, 0);
    for _ in 0..m {
        if rng.random::<f64>() < 0.5 {
            alloc.uniform_counts[by_size.draw(&mut rng)] += 1;
        } else {
            alloc.nonuniform_counts[by_cost.draw(&mut rng)] += 1;
        }
    }
    Ok(alloc)
}

/// One emitted draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedSample {
    pub point: Vec<f64>,
    pub weight: f64,
    /// Row of the point in the original dataset.
    pub source: usize,
}

/// Round-two work of one machine.
///
/// `m` is the global sample count. A distance-weighted draw on a partition
/// whose points all sit on the mean falls back to a uniform draw.
pub fn partition_sample(
    p: &Partition,
    g: &GlobalStats,
    u: usize,
    v: usize,
    m: usize,
    seed: u64,
) -> Result<Vec<WeightedSample>> {
    Ok(sample_partition(p, g, u, v, m, seed)?.0)
}

/// Returns the samples and the number of full passes over the partition.
fn sample_partition(
    p: &Partition,
    g: &GlobalStats,
    u: usize,
    v: usize,
    m: usize,
    seed: u64,
) -> Result<(Vec<WeightedSample>, usize)> {
    if u + v == 0 {
        return Ok((Vec::new(), 0));
    }
    if p.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "machine {} holds no points but was asked for {} draws",
            p.machine_id,
            u + v
        )));
    }
    if p.dim() != g.mean.len() {
        return Err(Error::DimensionMismatch {
            expected: g.mean.len(),
            got: p.dim(),
        });
    }
    let mut rng = stream(seed, Purpose::WorkerDraws, p.machine_id as u64);
    let mf = m as f64;
    let emit = |i: usize| WeightedSample {
        point: p.point(i).to_vec(),
        weight: 1.0 / (mf * g.proposal(p.point(i))),
        source: p.source(i),
    };
    let mut out = Vec::with_capacity(u + v);
    for _ in 0..u {
        out.push(emit(rng.random_range(0..p.len())));
    }
    let mut passes = 0;
    if v > 0 {
        passes += 1;
        let dist: Vec<f64> = (0..p.len())
            .map(|i| g.distance_to_mean(p.point(i)))
            .collect();
        let within = if dist.iter().any(|&d| d > 0.0) {
            SamplingDistribution::from_scores(&dist)?
        } else {
            SamplingDistribution::uniform(p.len())?
        };
        for _ in 0..v {
            out.push(emit(within.draw(&mut rng)));
        }
    }
    Ok((out, passes))
}

/// Messages exchanged between the coordinator and the workers.
#[derive(Debug, Clone, PartialEq)]
pub enum Message {
    Summary(PartitionSummary),
    Assignment {
        stats: GlobalStats,
        uniform: usize,
        nonuniform: usize,
        m: usize,
    },
    Samples {
        machine_id: usize,
        samples: Vec<WeightedSample>,
    },
}

/// Endpoint of a mailbox address.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endpoint {
    Coordinator,
    Worker(usize),
}

/// FIFO queues per endpoint.
#[derive(Debug, Default)]
pub struct Mailbox {
    coordinator: VecDeque<Message>,
    workers: Vec<VecDeque<Message>>,
    delivered: usize,
}

impl Mailbox {
    pub fn new(workers: usize) -> Self {
        Self {
            coordinator: VecDeque::new(),
            workers: vec![VecDeque::new(); workers],
            delivered: 0,
        }
    }

    pub fn send(&mut self, to: Endpoint, msg: Message) {
        self.delivered += 1;
        match to {
            Endpoint::Coordinator => self.coordinator.push_back(msg),
            Endpoint::Worker(i) => self.workers[i].push_back(msg),
        }
    }

    pub fn recv(&mut self, at: Endpoint) -> Option<Message> {
        match at {
            Endpoint::Coordinator => self.coordinator.pop_front(),
            Endpoint::Worker(i) => self.workers[i].pop_front(),
        }
    }

    /// Messages sent so far.
    pub fn delivered(&self) -> usize {
        self.delivered
    }
}

/// Result of a full protocol run.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolRun {
    pub coreset: Coreset,
    /// Original row of every coreset entry.
    pub sources: Vec<usize>,
    pub stats: GlobalStats,
    pub allocation: SampleAllocation,
    /// Full passes over its partition made by each worker.
    pub worker_passes: Vec<usize>,
    pub messages: usize,
}

fn companion_scale(div: &Divergence) -> Result<f64> {
    match div.mahalanobis_companion()?.metric {
        Metric::ScaledIdentity(s) => Ok(s),
        Metric::Full { .. } => Err(Error::Config(
            "the distributed construction needs a companion metric proportional to the identity"
                .into(),
        )),
    }
}

/// Runs both rounds over `partitions` and collects the samples in machine order.
pub fn run_protocol(
    partitions: &[Partition],
    m: usize,
    seed: u64,
    div: &Divergence,
) -> Result<ProtocolRun> {
    if m == 0 {
        return Err(Error::InvalidParameter(
            "sample count m must be >= 1".into(),
        ));
    }
    if partitions.is_empty() {
        return Err(Error::Empty("no partitions"));
    }
    let dim = partitions[0].dim();
    for (i, p) in partitions.iter().enumerate() {
        if p.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: p.dim(),
            });
        }
        if p.machine_id != i {
            return Err(Error::InvalidParameter(format!(
                "partition at position {i} has machine id {}",
                p.machine_id
            )));
        }
        div.validate_domain(p)?;
    }
    let scale = companion_scale(div)?;
    let workers = partitions.len();
    let mut mailbox = Mailbox::new(workers);
    let mut passes = vec![0usize; workers];

    // round one
    let summaries: Vec<PartitionSummary> = partitions.par_iter().map(summarize_partition).collect();
    for s in summaries {
        passes[s.machine_id] += 1;
        mailbox.send(Endpoint::Coordinator, Message::Summary(s));
    }
    let mut received = Vec::with_capacity(workers);
    while let Some(msg) = mailbox.recv(Endpoint::Coordinator) {
        if let Message::Summary(s) = msg {
            received.push(s);
        }
    }
    received.sort_by_key(|s| s.machine_id);
    let stats = merge_summaries_scaled(&received, scale)?;
    let allocation = allocate_samples(&stats, m, seed)?;
    for i in 0..workers {
        mailbox.send(
            Endpoint::Worker(i),
            Message::Assignment {
                stats: stats.clone(),
                uniform: allocation.uniform_counts[i],
                nonuniform: allocation.nonuniform_counts[i],
                m,
            },
        );
    }

    // round two
    let inbox: Vec<Option<Message>> = (0..workers)
        .map(|i| mailbox.recv(Endpoint::Worker(i)))
        .collect();
    let replies: Vec<(usize, Vec<WeightedSample>, usize)> = partitions
        .par_iter()
        .zip(inbox)
        .map(|(p, msg)| match msg {
            Some(Message::Assignment {
                stats,
                uniform,
                nonuniform,
                m,
            }) => {
                let (samples, passes) = sample_partition(p, &stats, uniform, nonuniform, m, seed)?;
                Ok((p.machine_id, samples, passes))
            }
            _ => Err(Error::Config(format!(
                "worker {} received no assignment",
                p.machine_id
            ))),
        })
        .collect::<Result<_>>()?;
    for (machine_id, samples, worker_passes) in replies {
        passes[machine_id] += worker_passes;
        mailbox.send(
            Endpoint::Coordinator,
            Message::Samples {
                machine_id,
                samples,
            },
        );
    }

    let mut coreset = Coreset::empty(dim);
    let mut sources = Vec::with_capacity(m);
    while let Some(msg) = mailbox.recv(Endpoint::Coordinator) {
        if let Message::Samples { samples, .. } = msg {
            for s in samples {
                coreset.push(&s.point, s.weight);
                sources.push(s.source);
            }
        }
    }
    debug_assert_eq!(coreset.len(), m);
    Ok(ProtocolRun {
        coreset,
        sources,
        stats,
        allocation,
        worker_passes: passes,
        messages: mailbox.delivered(),
    })
}

/// Lightweight coreset of size `m` built by the two-round protocol.
pub fn distributed_lightweight_coreset(
    partitions: &[Partition],
    m: usize,
    seed: u64,
    div: &Divergence,
) -> Result<Coreset> {
    Ok(run_protocol(partitions, m, seed, div)?.coreset)
}

/// Per-draw selection probability of every original row under the two-stage
/// scheme, by the law of total probability:
///
/// ```text
/// P(x) = 1/2 · |X_i|/n · 1/|X_i| + 1/2 · φ_i/φ · d(x,μ)/φ_i
/// ```
///
/// Indexed by original row.
pub fn marginal_probabilities(partitions: &[Partition], g: &GlobalStats) -> Vec<f64> {
    let n = g.n;
    let mut out = vec![0.0; n];
    let total = g.total_central_cost;
    for (i, p) in partitions.iter().enumerate() {
        let size = p.len() as f64;
        if size == 0.0 {
            continue;
        }
        let dist: Vec<f64> = (0..p.len())
            .map(|j| g.distance_to_mean(p.point(j)))
            .collect();
        let local = compensated_sum(dist.iter().copied());
        for (j, &d) in dist.iter().enumerate() {
            let uniform = 0.5 * (size / n as f64) * (1.0 / size);
            let nonuniform = if total > 0.0 {
                let share = g.per_partition_central_cost[i] / total;
                let within = if local > 0.0 { d / local } else { 1.0 / size };
                0.5 * share * within
            } else {
                0.5 * (size / n as f64) * (1.0 / size)
            };
            out[p.source(j)] = uniform + nonuniform;
        }
    }
    out
}
