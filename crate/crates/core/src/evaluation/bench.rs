//! Benchmark harness: relative error and speedup of coreset-derived
//! solutions against the full-data solution.
//!
//! For every `k` and repeat, the full data is solved once with the repeat's
//! seed. Every (method, m) cell of that repeat builds its summary and solves
//! it with the same seed, and `η` compares against that seed-matched full
//! run. Cells run one after another so the wall-clock timings do not compete
//! for cores; the construction and the solver are parallel internally.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::divergence::Divergence;
use crate::error::{Error, Result};
use crate::evaluation::relative_error;
use crate::model::{quantization_error, Dataset, PointSet};
use crate::numeric::mean_and_stderr;
use crate::rng::{derive_seed, Purpose};
use crate::sampling::{CoresetMethod, SamplerConfig};
use crate::solver::{solve_kmeans, SolveConfig};

/// How the full-data baseline pairs with the summary runs.
pub const PAIRING: &str = "seed_matched_full";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchMethod {
    Uniform,
    Lwcs,
    Cs,
    Full,
}

impl BenchMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            BenchMethod::Uniform => "uniform",
            BenchMethod::Lwcs => "lwcs",
            BenchMethod::Cs => "cs",
            BenchMethod::Full => "full",
        }
    }

    pub fn coreset_method(self) -> Option<CoresetMethod> {
        match self {
            BenchMethod::Uniform => Some(CoresetMethod::Uniform),
            BenchMethod::Lwcs => Some(CoresetMethod::Lwcs),
            BenchMethod::Cs => Some(CoresetMethod::Cs),
            BenchMethod::Full => None,
        }
    }
}

impl From<CoresetMethod> for BenchMethod {
    fn from(m: CoresetMethod) -> Self {
        match m {
            CoresetMethod::Uniform => BenchMethod::Uniform,
            CoresetMethod::Lwcs => BenchMethod::Lwcs,
            CoresetMethod::Cs => BenchMethod::Cs,
        }
    }
}

impl fmt::Display for BenchMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for BenchMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(BenchMethod::Full),
            other => other.parse::<CoresetMethod>().map(Into::into),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub methods: Vec<BenchMethod>,
    pub ms: Vec<usize>,
    pub ks: Vec<usize>,
    pub repeats: usize,
    pub seed: u64,
    pub max_iters: usize,
    pub rel_tol: f64,
    pub restarts: usize,
    pub seeding_only: bool,
}

impl BenchmarkConfig {
    pub fn new(
        methods: Vec<BenchMethod>,
        ms: Vec<usize>,
        ks: Vec<usize>,
        repeats: usize,
        seed: u64,
    ) -> Self {
        let defaults = SolveConfig::new(1);
        Self {
            methods,
            ms,
            ks,
            repeats,
            seed,
            max_iters: defaults.max_iters,
            rel_tol: defaults.rel_tol,
            restarts: defaults.restarts,
            seeding_only: defaults.seeding_only,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.into()));
        if self.methods.is_empty() || self.ks.is_empty() {
            return bad("method and k grids must be nonempty");
        }
        if self.methods.iter().any(|m| *m != BenchMethod::Full) && self.ms.is_empty() {
            return bad("the m grid must be nonempty");
        }
        if self.ms.contains(&0) || self.ks.contains(&0) {
            return bad("grid values must be >= 1");
        }
        if self.repeats == 0 {
            return bad("repeats must be >= 1");
        }
        self.solve_config(1, 0).validate()
    }

    fn solve_config(&self, k: usize, seed: u64) -> SolveConfig {
        SolveConfig {
            k,
            seed,
            max_iters: self.max_iters,
            rel_tol: self.rel_tol,
            restarts: self.restarts,
            seeding_only: self.seeding_only,
        }
    }
}

/// Wall-clock measurements, kept apart from the deterministic fields.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub construct_seconds: f64,
    pub solve_seconds: f64,
    /// Full-data solve time over construct plus solve time.
    pub speedup: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkResult {
    pub method: BenchMethod,
    pub k: usize,
    /// Summary size; `n` for the full data.
    pub m: usize,
    pub repeat: usize,
    pub seed: u64,
    /// `φ_X` of the solution.
    pub cost: f64,
    pub relative_error: f64,
    pub timing: Timing,
}

/// Mean over repeats of one (method, k, m) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub method: BenchMethod,
    pub k: usize,
    pub m: usize,
    pub repeats: usize,
    pub eta_mean: f64,
    /// Half-width of the normal-approximation 95% interval, `1.96·SE`.
    pub eta_ci95: f64,
    pub timing: Timing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub schema: String,
    pub n: usize,
    pub d: usize,
    pub pairing: String,
    pub results: Vec<BenchmarkResult>,
    pub summaries: Vec<CellSummary>,
}

fn timed<T>(f: impl FnOnce() -> Result<T>) -> Result<(T, f64)> {
    let start = Instant::now();
    let out = f()?;
    Ok((out, start.elapsed().as_secs_f64()))
}

pub fn benchmark(x: &Dataset, cfg: &BenchmarkConfig, div: &Divergence) -> Result<BenchmarkReport> {
    cfg.validate()?;
    let mut results = Vec::new();
    for &k in &cfg.ks {
        for repeat in 0..cfg.repeats {
            let seed = derive_seed(cfg.seed, Purpose::Repetition, repeat as u64);
            let solve = cfg.solve_config(k, seed);
            let (full, full_seconds) = timed(|| solve_kmeans(x, &solve, div))?;
            let full_cost = quantization_error(x, &full.centers, div)?;
            if !(full_cost > 0.0) {
                return Err(Error::ZeroReference);
            }
            for &method in &cfg.methods {
                let Some(cm) = method.coreset_method() else {
                    results.push(BenchmarkResult {
                        method,
                        k,
                        m: x.n(),
                        repeat,
                        seed,
                        cost: full_cost,
                        relative_error: 0.0,
                        timing: Timing {
                            construct_seconds: 0.0,
                            solve_seconds: full_seconds,
                            speedup: 1.0,
                        },
                    });
                    continue;
                };
                for &m in &cfg.ms {
                    let sampler = SamplerConfig::new(m, seed);
                    let (c, construct_seconds) = timed(|| cm.construct(x, &sampler, k, div))?;
                    let (sol, solve_seconds) = timed(|| solve_kmeans(&c, &solve, div))?;
                    let cost = quantization_error(x, &sol.centers, div)?;
                    results.push(BenchmarkResult {
                        method,
                        k,
                        m,
                        repeat,
                        seed,
                        cost,
                        relative_error: relative_error(cost, full_cost)?,
                        timing: Timing {
                            construct_seconds,
                            solve_seconds,
                            speedup: full_seconds
                                / (construct_seconds + solve_seconds).max(f64::MIN_POSITIVE),
                        },
                    });
                }
            }
        }
    }
    results.sort_by_key(|r| (r.method, r.k, r.m, r.repeat));
    let summaries = summarize(&results);
    Ok(BenchmarkReport {
        schema: "v1".into(),
        n: x.n(),
        d: x.dim(),
        pairing: PAIRING.into(),
        results,
        summaries,
    })
}

/// Groups sorted results by (method, k, m).
fn summarize(results: &[BenchmarkResult]) -> Vec<CellSummary> {
    results
        .chunk_by(|a, b| (a.method, a.k, a.m) == (b.method, b.k, b.m))
        .map(|cell| {
            let etas: Vec<f64> = cell.iter().map(|r| r.relative_error).collect();
            let (eta_mean, se) = mean_and_stderr(&etas);
            let mean_of = |f: fn(&Timing) -> f64| {
                cell.iter().map(|r| f(&r.timing)).sum::<f64>() / cell.len() as f64
            };
            CellSummary {
                method: cell[0].method,
                k: cell[0].k,
                m: cell[0].m,
                repeats: cell.len(),
                eta_mean,
                eta_ci95: 1.96 * se,
                timing: Timing {
                    construct_seconds: mean_of(|t| t.construct_seconds),
                    solve_seconds: mean_of(|t| t.solve_seconds),
                    speedup: mean_of(|t| t.speedup),
                },
            }
        })
        .collect()
}

/// One row per cell: relative error with its 95% interval, then speedup.
pub fn format_table(report: &BenchmarkReport) -> String {
    let mut out = format!(
        "{:<8} {:>6} {:>8} {:>20} {:>10}\n",
        "method", "k", "m", "rel. error", "speedup"
    );
    for s in &report.summaries {
        let err = format!("{:.1}% ± {:.1}%", s.eta_mean * 100.0, s.eta_ci95 * 100.0);
        out.push_str(&format!(
            "{:<8} {:>6} {:>8} {:>20} {:>9.1}x\n",
            s.method.as_str(),
            s.k,
            s.m,
            err,
            s.timing.speedup
        ));
    }
    out
}

/// Tidy per-run CSV: `method,k,m,seed,eta,construct_s,solve_s`.
pub fn write_results_csv<W: Write>(out: W, results: &[BenchmarkResult]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Format {
        path: "<benchmark csv>".into(),
        message: e.to_string(),
    };
    w.write_record(["method", "k", "m", "seed", "eta", "construct_s", "solve_s"])
        .map_err(io)?;
    for r in results {
        w.write_record([
            r.method.as_str().to_string(),
            r.k.to_string(),
            r.m.to_string(),
            r.seed.to_string(),
            r.relative_error.to_string(),
            r.timing.construct_seconds.to_string(),
            r.timing.solve_seconds.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::Format {
        path: "<benchmark csv>".into(),
        message: e.to_string(),
    })
}
