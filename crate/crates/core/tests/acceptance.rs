//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails. Pass criterion numbers to run a subset:
//! `cargo test --test acceptance -- 1 3 8`.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use common::*;
use corekit::distributed::{
    marginal_probabilities, merge_summaries, partition_dataset, run_protocol, summarize_partition,
    Partition, PartitionStrategy,
};
use corekit::evaluation::{
    benchmark, erm_experiment, theorem1_gap, BenchMethod, BenchmarkConfig, ErmConfig,
    GeneratorSpec, ProbeConfig, ProbeSet,
};
use corekit::rng::{stream, Purpose};
use corekit::sampling::{
    lwcs_distribution, point_sensitivity_bound, sensitivity_bounds, CoresetMethod, SamplerConfig,
};
use corekit::solver::{solve_kmeans, SolveConfig};
use corekit::{
    dataset_mean, quantization_error, CenterSet, Dataset, DatasetStats, Divergence, Metric,
};
use rand::Rng;
use serde_json::Value;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

/// Datasets with varied shape: blobs, heavy tails, one outlier, duplicates.
fn random_dataset(seed: u64, n: usize, d: usize) -> Dataset {
    let mut r = rng(seed);
    let flat = match seed % 4 {
        0 => random_blobs(seed, n, d, 1 + (seed as usize % 7)),
        1 => (0..n * d)
            .map(|_| {
                let u: f64 = 1.0 - r.random::<f64>();
                u.powf(-0.7) * if r.random::<bool>() { 1.0 } else { -1.0 }
            })
            .collect(),
        2 => {
            let mut v: Vec<f64> = (0..n * d).map(|_| gaussian(&mut r)).collect();
            v[..d].iter_mut().for_each(|c| *c += 1e4);
            v
        }
        _ => (0..n * d).map(|_| r.random_range(0..3) as f64).collect(),
    };
    Dataset::from_flat(d, flat).unwrap()
}

fn datasets() -> Vec<Dataset> {
    let mut r = rng(2024);
    let mut out: Vec<Dataset> = (0..100u64)
        .map(|i| {
            let n = r.random_range(10..=10_000);
            let d = r.random_range(1..=50);
            random_dataset(i, n, d)
        })
        .collect();
    out.push(Dataset::from_scalars(&[0.0, 0.0, 3.0]).unwrap());
    out
}

fn mean_sensitivity() -> Outcome {
    let div = Divergence::squared_euclidean();
    let mut worst: f64 = 0.0;
    for x in datasets().iter().take(100) {
        let s = sensitivity_bounds(x, &div).unwrap();
        let mean = s.iter().sum::<f64>() / s.len() as f64;
        worst = worst.max((mean - 32.0).abs() / 32.0);
    }
    outcome(
        worst <= 1e-9,
        format!("100 datasets, max relative deviation {worst:.2e} (limit 1e-9)"),
    )
}

fn lemma_one() -> Outcome {
    let div = Divergence::squared_euclidean();
    let mut r = rng(77);
    let mut violations = 0;
    let mut worst_ratio: f64 = 0.0;
    let mut oracle_gap: f64 = 0.0;
    let triples = 10_000;
    for t in 0..triples / 10 {
        let n = r.random_range(2..=300);
        let d = r.random_range(1..=10);
        let x = random_dataset(t as u64 + 1000, n, d);
        let pts = rows(x.as_flat(), d);
        let mu = mean(&pts);
        let phi_mu = unit_cost(&pts, std::slice::from_ref(&mu));
        for _ in 0..10 {
            let i = r.random_range(0..n);
            let k = r.random_range(1..=10);
            let scale = 10f64.powf(r.random_range(-3.0..4.0));
            let centers: Vec<Vec<f64>> = (0..k)
                .map(|_| match r.random_range(0..3) {
                    0 => pts[r.random_range(0..n)]
                        .iter()
                        .map(|v| v + scale * 1e-3 * gaussian(&mut r))
                        .collect(),
                    1 => mu.iter().map(|v| v + scale * gaussian(&mut r)).collect(),
                    _ => (0..d).map(|_| scale * gaussian(&mut r)).collect(),
                })
                .collect();
            let f_tilde = (unit_cost(&pts, &centers) + phi_mu) / (2.0 * n as f64);
            let dist = centers
                .iter()
                .map(|c| sq_dist(&pts[i], c))
                .fold(f64::INFINITY, f64::min);
            let s = point_sensitivity_bound(&x, i, &div).unwrap();
            let s_oracle = if phi_mu > 0.0 {
                16.0 * sq_dist(&pts[i], &mu) / (phi_mu / n as f64) + 16.0
            } else {
                32.0
            };
            oracle_gap = oracle_gap.max((s - s_oracle).abs() / s_oracle);
            if dist > s * f_tilde {
                violations += 1;
            }
            if f_tilde > 0.0 {
                worst_ratio = worst_ratio.max(dist / (s * f_tilde));
            }
        }
    }
    outcome(
        violations == 0 && oracle_gap < 1e-9,
        format!("{triples} triples, {violations} violations, max d²/(s·f) = {worst_ratio:.3}, s vs oracle {oracle_gap:.1e}"),
    )
}

fn distribution_identity() -> Outcome {
    let div = Divergence::squared_euclidean();
    let mut worst: f64 = 0.0;
    let sets = datasets();
    for x in &sets {
        let q = lwcs_distribution(x, &div).unwrap();
        let s = sensitivity_bounds(x, &div).unwrap();
        let n = x.n() as f64;
        for (p, s) in q.probs().iter().zip(&s) {
            worst = worst.max((p - s / (32.0 * n)).abs());
        }
    }
    outcome(
        worst <= 1e-12,
        format!(
            "{} datasets, max |q - s/(32n)| = {worst:.2e} (limit 1e-12)",
            sets.len()
        ),
    )
}

fn unbiasedness() -> Outcome {
    let div = Divergence::squared_euclidean();
    let seeds = 10_000u64;
    let mut lines = Vec::new();
    let mut pass = true;
    for case in 0..5u64 {
        let (n, d) = [(3, 1), (50, 1), (200, 2), (400, 5), (120, 3)][case as usize];
        let x = if case == 0 {
            Dataset::from_scalars(&[0.0, 0.0, 3.0]).unwrap()
        } else {
            random_dataset(case * 31, n, d)
        };
        let pts = rows(x.as_flat(), d);
        let mut r = rng(case);
        let centers: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..d).map(|_| 3.0 * gaussian(&mut r)).collect())
            .collect();
        let q = CenterSet::from_rows(centers.clone()).unwrap();
        let truth = unit_cost(&pts, &centers);
        let m = (n / 4).max(2);
        let mut worst_z: f64 = 0.0;
        for method in CoresetMethod::ALL {
            let costs: Vec<f64> = (0..seeds)
                .map(|seed| {
                    let c = method
                        .construct(&x, &SamplerConfig::new(m, seed), 3, &div)
                        .unwrap();
                    quantization_error(&c, &q, &div).unwrap()
                })
                .collect();
            let (mean, se) = mean_se(&costs);
            let z = if se > 0.0 {
                (mean - truth).abs() / se
            } else {
                f64::from(mean != truth) * f64::INFINITY
            };
            worst_z = worst_z.max(z);
        }
        pass &= worst_z < 5.0;
        lines.push(format!("{worst_z:.2}"));
    }
    outcome(
        pass,
        format!(
            "5 pairs x 3 methods x {seeds} seeds, worst |z| per pair [{}] (limit 5)",
            lines.join(", ")
        ),
    )
}

fn theorem_two_rate() -> Outcome {
    let div = Divergence::squared_euclidean();
    let x = Dataset::from_flat(5, random_blobs(5, 10_000, 5, 8)).unwrap();
    let probes = ProbeSet::generate(&x, &ProbeConfig::new(10, 1).count(200), &div).unwrap();
    let ms: Vec<usize> = (6..=13).map(|e| 1 << e).collect();
    let seeds = 15u64;
    let mut medians = Vec::new();
    for &m in &ms {
        let mut maxes: Vec<f64> = (0..seeds)
            .map(|seed| {
                let c = CoresetMethod::Lwcs
                    .construct(&x, &SamplerConfig::new(m, 100 + seed), 10, &div)
                    .unwrap();
                probes.evaluate(&c, &div).unwrap().max_margin
            })
            .collect();
        maxes.sort_by(f64::total_cmp);
        medians.push(maxes[maxes.len() / 2]);
    }
    let lx: Vec<f64> = ms.iter().map(|&m| (m as f64).ln()).collect();
    let ly: Vec<f64> = medians.iter().map(|v| v.ln()).collect();
    let slope = corekit::numeric::ols_slope(&lx, &ly);
    outcome(
        (slope + 0.5).abs() <= 0.15,
        format!(
            "n=10^4 d=5, 200 probes, {seeds} seeds, median max-margin {:.3} at m=64 -> {:.4} at m=8192, slope {slope:.3} (target -0.5 ± 0.15)",
            medians[0],
            medians[medians.len() - 1]
        ),
    )
}

fn distributed_equivalence() -> Outcome {
    let div = Divergence::squared_euclidean();
    let mut details = Vec::new();
    let mut pass = true;

    let frequencies = |parts: &[Partition], n: usize| {
        let mut counts = vec![0u64; n];
        for seed in 0..100 {
            for s in run_protocol(parts, 1000, seed, &div).unwrap().sources {
                counts[s] += 1;
            }
        }
        counts
    };

    let three = Dataset::from_scalars(&[0.0, 0.0, 3.0]).unwrap();
    let split = vec![
        Partition::new(0, 1, vec![0.0, 0.0], vec![0, 1]).unwrap(),
        Partition::new(1, 1, vec![3.0], vec![2]).unwrap(),
    ];
    let (_, p) = chi_squared(
        &frequencies(&split, 3),
        lwcs_distribution(&three, &div).unwrap().probs(),
    );
    pass &= p > 0.001;
    details.push(format!("3-point p-value {p:.3}"));

    let x = random_dataset(8, 60, 3);
    let q = lwcs_distribution(&x, &div).unwrap();
    for (parts, strategy) in [
        (2, PartitionStrategy::RoundRobin),
        (4, PartitionStrategy::Contiguous),
        (8, PartitionStrategy::RoundRobin),
    ] {
        let split = partition_dataset(&x, parts, strategy).unwrap();
        let (_, p) = chi_squared(&frequencies(&split, x.n()), q.probs());
        pass &= p > 0.001;
        details.push(format!("p={parts} p-value {p:.3}"));
    }

    // a single machine reproduces the single-machine statistics and law
    let one = partition_dataset(&x, 1, PartitionStrategy::Contiguous).unwrap();
    let g = merge_summaries(&[summarize_partition(&one[0])]).unwrap();
    let stats = DatasetStats::compute(&x, &div).unwrap();
    let mean_bits = g
        .mean
        .iter()
        .zip(&stats.mean)
        .all(|(a, b)| a.to_bits() == b.to_bits());
    let law_gap = marginal_probabilities(&one, &g)
        .iter()
        .zip(q.probs())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let m = 500;
    let run = run_protocol(&one, m, 3, &div).unwrap();
    let weight_gap = run
        .sources
        .iter()
        .zip(run.coreset.weights())
        .map(|(&i, w)| (w * m as f64 * q.prob(i) - 1.0).abs())
        .fold(0.0, f64::max);
    let single = mean_bits && law_gap <= 1e-12 && weight_gap <= 1e-12 && dataset_mean(&x) == g.mean;
    pass &= single;
    details.push(format!(
        "p=1 mean bit-identical {mean_bits}, law gap {law_gap:.1e}, weight gap {weight_gap:.1e}"
    ));
    outcome(pass, format!("10^5 draws each; {}", details.join("; ")))
}

/// Optimal 1-D 2-means cost by scanning contiguous splits of the sorted data.
fn optimal_two_means_1d(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let sse = |s: &[f64]| {
        let m = s.iter().sum::<f64>() / s.len() as f64;
        s.iter().map(|x| (x - m) * (x - m)).sum::<f64>()
    };
    (1..v.len())
        .map(|i| sse(&v[..i]) + sse(&v[i..]))
        .fold(sse(&v), f64::min)
}

fn theorem_one_gap() -> Outcome {
    let div = Divergence::squared_euclidean();
    let mut holds = 0;
    let mut oracle_ok = true;
    let runs = 200u64;
    for seed in 0..runs {
        let mut r = rng(5000 + seed);
        let n = r.random_range(8..=12);
        let values: Vec<f64> = (0..n)
            .map(|_| if r.random::<f64>() < 0.3 { 8.0 } else { 0.0 } + gaussian(&mut r))
            .collect();
        let x = Dataset::from_scalars(&values).unwrap();
        let c = CoresetMethod::Lwcs
            .construct(&x, &SamplerConfig::new(6, seed), 2, &div)
            .unwrap();
        let g = theorem1_gap(
            &x,
            &c,
            &SolveConfig::new(2).seed(seed),
            &ProbeConfig::new(2, seed).count(200),
            &div,
        )
        .unwrap();
        let opt = optimal_two_means_1d(&values);
        oracle_ok &= g.exhaustive && (g.full_cost - opt).abs() <= 1e-9 * (1.0 + opt);
        holds += usize::from(g.holds);
    }
    let frac = holds as f64 / runs as f64;
    outcome(
        frac >= 0.95 && oracle_ok,
        format!("n in 8..=12, m=6, {runs} seeds: bound holds in {holds} ({:.1}%, need 95%); exhaustive optimum matches split oracle: {oracle_ok}", 100.0 * frac),
    )
}

fn table_one_direction() -> Outcome {
    let div = Divergence::squared_euclidean();
    let spec = GeneratorSpec::HeavyTailContaminated {
        dim: 10,
        fraction: 0.01,
        distance: 100.0,
        clusters: 5,
        tail_exponent: None,
    };
    let x = spec
        .sample(100_000, &mut stream(8, Purpose::Generator, 0))
        .unwrap();
    let mut cfg = BenchmarkConfig::new(
        vec![BenchMethod::Uniform, BenchMethod::Lwcs, BenchMethod::Cs],
        vec![200, 500, 1000],
        vec![50],
        50,
        8,
    );
    cfg.max_iters = 50;
    let report = benchmark(&x, &cfg, &div).unwrap();
    let cell = |method, m| {
        report
            .summaries
            .iter()
            .find(|s| s.method == method && s.m == m)
            .unwrap()
    };
    let (l, u) = (
        cell(BenchMethod::Lwcs, 200),
        cell(BenchMethod::Uniform, 200),
    );
    let separated = l.eta_mean + l.eta_ci95 < u.eta_mean - u.eta_ci95;
    let construct = |method| {
        let cells: Vec<_> = report
            .summaries
            .iter()
            .filter(|s| s.method == method)
            .collect();
        cells
            .iter()
            .map(|s| s.timing.construct_seconds)
            .sum::<f64>()
            / cells.len() as f64
    };
    let ratio = construct(BenchMethod::Cs) / construct(BenchMethod::Lwcs);
    outcome(
        separated && ratio >= 3.0,
        format!(
            "n=10^5 d=10 k=50, 50 seeds, m=200: eta lwcs {:.1}% ± {:.1}% vs uniform {:.1}% ± {:.1}%; construct cs/lwcs = {ratio:.1}x (need 3x)",
            100.0 * l.eta_mean,
            100.0 * l.eta_ci95,
            100.0 * u.eta_mean,
            100.0 * u.eta_ci95
        ),
    )
}

fn bregman_checks() -> Outcome {
    let (lo, hi) = (0.1, 4.0);
    let mut pass = true;
    let mut details = Vec::new();
    let mut r = rng(99);
    for (name, div, a_scale, mu) in [
        (
            "kl",
            Divergence::generalized_kl(),
            1.0 / (2.0 * lo),
            lo / hi,
        ),
        (
            "is",
            Divergence::itakura_saito(),
            1.0 / (2.0 * lo * lo),
            (lo / hi) * (lo / hi),
        ),
    ] {
        let div = div.with_domain(lo, hi).unwrap();
        let comp = div.mahalanobis_companion().unwrap();
        let derived = matches!(comp.metric, Metric::ScaledIdentity(s) if (s - a_scale).abs() <= 1e-12 * a_scale)
            && (comp.mu_sim - mu).abs() <= 1e-15;
        let mut violations = 0;
        for _ in 0..100_000 {
            let d = r.random_range(1..=4);
            let x: Vec<f64> = (0..d).map(|_| r.random_range(lo..=hi)).collect();
            let y: Vec<f64> = (0..d).map(|_| r.random_range(lo..=hi)).collect();
            let v = div.eval(&x, &y).unwrap();
            let da = comp.metric.eval(&x, &y);
            let tol = 1e-12 * (1.0 + da);
            if v < comp.mu_sim * da - tol || v > da + tol {
                violations += 1;
            }
        }
        pass &= derived && violations == 0;
        details.push(format!("{name}: companion as derived {derived}, {violations} sandwich violations in 10^5 pairs"));

        // weighted-mean centroid against a grid search on 1-D instances
        let mut worst: f64 = 0.0;
        let step = 1e-4;
        for _ in 0..5 {
            let vals: Vec<f64> = (0..7).map(|_| r.random_range(lo..=hi)).collect();
            let w: Vec<f64> = (0..7).map(|_| r.random_range(0.1..3.0)).collect();
            let c = corekit::Coreset::new(1, vals.clone(), w.clone()).unwrap();
            let center = solve_kmeans(&c, &SolveConfig::new(1), &div)
                .unwrap()
                .centers
                .center(0)[0];
            let total = |q: f64| {
                vals.iter()
                    .zip(&w)
                    .map(|(v, w)| w * div.eval(&[*v], &[q]).unwrap())
                    .sum::<f64>()
            };
            let grid = (0..=((hi - lo) / step) as usize)
                .map(|i| lo + i as f64 * step)
                .min_by(|a, b| total(*a).total_cmp(&total(*b)))
                .unwrap();
            worst = worst.max((grid - center).abs());
        }
        pass &= worst <= step;
        details.push(format!(
            "{name}: centroid vs grid {worst:.1e} (grid step {step:.0e})"
        ));
    }
    outcome(pass, details.join("; "))
}

fn erm() -> Outcome {
    let mut cfg = ErmConfig::new(GeneratorSpec::standard_gaussian(1), 1000, 100, 2, 1);
    cfg.probes = 4;
    let g = erm_experiment(&cfg).unwrap();
    let consistent = (g.variance_estimate.powi(2) * g.kurtosis_estimate - g.fourth_moment_estimate)
        .abs()
        <= 1e-6 * g.fourth_moment_estimate;
    let kurtosis_ok = (g.kurtosis_estimate - 3.0).abs() <= 0.05 && g.truth_size == 1_000_000;

    let seeds = 50u64;
    let wins = (0..seeds)
        .filter(|&seed| {
            let mut cfg = ErmConfig::new(
                GeneratorSpec::contaminated(1, 0.01, 100.0),
                100_000,
                1000,
                3,
                seed,
            );
            cfg.probes = 40;
            let r = erm_experiment(&cfg).unwrap();
            r.coreset_epsilon < r.uniform_epsilon
        })
        .count();
    let frac = wins as f64 / seeds as f64;
    outcome(
        kurtosis_ok && consistent && frac >= 0.6,
        format!(
            "K of N(0,1) on 10^6 samples = {:.4} (3 ± 0.05), moment identity {consistent}; contaminated: lwcs beats uniform in {wins}/{seeds} (need 60%)",
            g.kurtosis_estimate
        ),
    )
}

fn strip_timing(v: &mut Value) {
    match v {
        Value::Object(map) => {
            map.remove("timing");
            map.values_mut().for_each(strip_timing);
        }
        Value::Array(items) => items.iter_mut().for_each(strip_timing),
        _ => {}
    }
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let x = dir.path().join("x.csv");
    let flat = random_blobs(3, 5000, 4, 6);
    let text: String = flat
        .chunks(4)
        .map(|r| format!("{},{},{},{}\n", r[0], r[1], r[2], r[3]))
        .collect();
    std::fs::write(&x, text).unwrap();
    let c = dir.path().join("c.csv");
    let (xs, cs) = (x.to_str().unwrap(), c.to_str().unwrap());
    let run = |args: &[&str], out: &Path, threads: &str| -> Vec<u8> {
        let o = Command::new(env!("CARGO_BIN_EXE_corekit"))
            .args(args)
            .env("COREKIT_THREADS", threads)
            .output()
            .unwrap();
        assert!(
            o.status.success(),
            "{args:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        let bytes = if out.as_os_str().is_empty() {
            o.stdout
        } else {
            std::fs::read(out).unwrap()
        };
        match serde_json::from_slice::<Value>(&bytes) {
            Ok(mut v) => {
                strip_timing(&mut v);
                serde_json::to_vec(&v).unwrap()
            }
            Err(_) => bytes,
        }
    };
    let none = Path::new("");
    std::fs::write(
        &c,
        run(
            &["construct", "--input", xs, "--m", "400", "--seed", "1"],
            none,
            "1",
        ),
    )
    .unwrap();
    let commands: Vec<(&str, Vec<&str>)> = vec![
        (
            "construct",
            vec![
                "construct",
                "--input",
                xs,
                "--m",
                "400",
                "--method",
                "cs",
                "--k",
                "6",
                "--seed",
                "1",
            ],
        ),
        (
            "solve",
            vec![
                "solve",
                "--input",
                cs,
                "--k",
                "6",
                "--seed",
                "2",
                "--restarts",
                "3",
            ],
        ),
        (
            "bench",
            vec![
                "bench",
                "--input",
                xs,
                "--k",
                "6",
                "--m",
                "100,300",
                "--repeats",
                "4",
                "--seed",
                "3",
            ],
        ),
        (
            "distributed-sim",
            vec![
                "distributed-sim",
                "--input",
                xs,
                "--partitions",
                "5",
                "--m",
                "400",
                "--seed",
                "4",
            ],
        ),
        (
            "stat-experiment",
            vec![
                "stat-experiment",
                "--n",
                "5000",
                "--m",
                "200",
                "--truth-size",
                "50000",
                "--probes",
                "20",
            ],
        ),
        (
            "check",
            vec![
                "check",
                "--input",
                xs,
                "--coreset",
                cs,
                "--probes",
                "60",
                "--k",
                "6",
            ],
        ),
    ];
    let mut same = Vec::new();
    for (name, args) in &commands {
        let a = run(args, none, "1");
        let b = run(args, none, "1");
        let c = run(args, none, "4");
        same.push((name, a == b && a == c));
    }
    let pass = same.iter().all(|(_, s)| *s);
    let failed: Vec<_> = same.iter().filter(|(_, s)| !s).map(|(n, _)| **n).collect();
    outcome(
        pass,
        if pass {
            "all 6 commands byte-identical (timing keys excluded) across reruns and thread counts"
                .to_string()
        } else {
            format!("differing outputs: {failed:?}")
        },
    )
}

type Criterion = (u32, &'static str, Option<Duration>, fn() -> Outcome);

fn main() {
    let criteria: Vec<Criterion> = vec![
        (
            1,
            "mean sensitivity is 32",
            Some(Duration::from_secs(10)),
            mean_sensitivity,
        ),
        (
            2,
            "sensitivity bound holds pointwise",
            Some(Duration::from_secs(30)),
            lemma_one,
        ),
        (3, "proposal equals s/(32n)", None, distribution_identity),
        (
            4,
            "constructions are unbiased",
            Some(Duration::from_secs(120)),
            unbiasedness,
        ),
        (
            5,
            "max margin decays like m^-1/2",
            Some(Duration::from_secs(300)),
            theorem_two_rate,
        ),
        (
            6,
            "distributed construction has the single-machine law",
            None,
            distributed_equivalence,
        ),
        (
            7,
            "solution-quality bound on brute-force instances",
            None,
            theorem_one_gap,
        ),
        (
            8,
            "lwcs beats uniform and builds faster than cs",
            Some(Duration::from_secs(900)),
            table_one_direction,
        ),
        (9, "Bregman similarity and centroids", None, bregman_checks),
        (10, "statistical k-means experiment", None, erm),
        (11, "commands are deterministic", None, determinism),
    ];
    let selected: Vec<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failed = 0;
    for (id, name, limit, f) in criteria {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(f));
        let elapsed = start.elapsed();
        let (mut pass, mut detail) = match result {
            Ok(o) => (o.pass, o.detail),
            Err(e) => {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                (false, format!("panicked: {msg}"))
            }
        };
        if let Some(limit) = limit {
            if elapsed > limit {
                pass = false;
                detail.push_str(&format!("; over the {}s runtime limit", limit.as_secs()));
            }
        }
        failed += usize::from(!pass);
        println!(
            "{} criterion {id:>2} ({name}): {detail} [{:.1}s]",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
