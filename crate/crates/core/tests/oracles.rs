//! Monte-Carlo and hand-arithmetic oracles for the sampling, seeding and
//! distributed constructions.

mod common;

use common::*;
use corekit::distributed::{
    allocate_samples, merge_summaries, partition_sample, run_protocol, summarize_partition,
    Partition,
};
use corekit::sampling::{
    lightweight_coreset, lwcs_distribution, point_sensitivity_bound, sensitivity_coreset,
    uniform_coreset, SamplerConfig,
};
use corekit::solver::dsq_seed;
use corekit::{quantization_error, CenterSet, Coreset, Dataset, Divergence, PointSet};

const DRAWS: u64 = 100_000;

fn three() -> Dataset {
    Dataset::from_scalars(&[0.0, 0.0, 3.0]).unwrap()
}

fn split() -> Vec<Partition> {
    vec![
        Partition::new(0, 1, vec![0.0, 0.0], vec![0, 1]).unwrap(),
        Partition::new(1, 1, vec![3.0], vec![2]).unwrap(),
    ]
}

/// |observed - p| within `z` binomial standard deviations.
fn within(count: u64, total: u64, p: f64, z: f64) -> bool {
    let f = count as f64 / total as f64;
    (f - p).abs() <= z * (p * (1.0 - p) / total as f64).sqrt()
}

#[test]
fn three_point_hand_values() {
    let x = three();
    let div = Divergence::squared_euclidean();
    assert_eq!(
        lwcs_distribution(&x, &div).unwrap().probs(),
        &[0.25, 0.25, 0.5]
    );
    let s: Vec<f64> = (0..3)
        .map(|i| point_sensitivity_bound(&x, i, &div).unwrap())
        .collect();
    assert_eq!(s, vec![24.0, 24.0, 48.0]);
    assert_eq!(s.iter().sum::<f64>() / 3.0, 32.0);
    let c = Coreset::new(1, vec![0.0, 3.0], vec![2.0, 1.0]).unwrap();
    let q = CenterSet::from_scalars(&[1.0]).unwrap();
    assert_eq!(quantization_error(&c, &q, &div).unwrap(), 6.0);
    assert_eq!(quantization_error(&x, &q, &div).unwrap(), 6.0);
}

#[test]
fn seeding_picks_by_weight() {
    // k = 1 on weights (1, 3): the heavier point comes first three times in four
    let s = Coreset::new(1, vec![0.0, 1.0], vec![1.0, 3.0]).unwrap();
    let div = Divergence::squared_euclidean();
    let hits = (0..DRAWS)
        .filter(|&seed| dsq_seed(&s, 1, seed, &div).unwrap().center(0)[0] == 1.0)
        .count() as u64;
    assert!(
        within(hits, DRAWS, 0.75, 5.0),
        "P(b) = {}",
        hits as f64 / DRAWS as f64
    );
}

#[test]
fn lightweight_coreset_is_unbiased_on_three_points() {
    let x = three();
    let div = Divergence::squared_euclidean();
    let q = CenterSet::from_scalars(&[0.0]).unwrap();
    let truth = unit_cost(&rows(x.as_flat(), 1), &[vec![0.0]]);
    assert_eq!(truth, 9.0);
    let costs: Vec<f64> = (0..DRAWS)
        .map(|seed| {
            quantization_error(
                &lightweight_coreset(&x, &SamplerConfig::new(2, seed), &div).unwrap(),
                &q,
                &div,
            )
            .unwrap()
        })
        .collect();
    let (m, se) = mean_se(&costs);
    assert!((m - truth).abs() < 5.0 * se, "mean {m} se {se}");
}

#[test]
fn total_weight_concentrates_at_n() {
    let x = three();
    let c = lightweight_coreset(
        &x,
        &SamplerConfig::new(200_000, 1),
        &Divergence::squared_euclidean(),
    )
    .unwrap();
    let total: f64 = c.weights().iter().sum();
    assert!((total - 3.0).abs() < 0.02, "{total}");
    // point 3 has q = 1/2
    let w3 = c.entries().find(|(p, _)| p[0] == 3.0).unwrap().1;
    assert_eq!(w3, 2.0 / 200_000.0);
}

#[test]
fn uniform_and_sensitivity_are_unbiased() {
    let flat = random_blobs(3, 60, 2, 3);
    let x = Dataset::from_flat(2, flat.clone()).unwrap();
    let div = Divergence::squared_euclidean();
    let centers = vec![vec![0.0, 0.0], vec![5.0, -5.0]];
    let q = CenterSet::from_rows(centers.clone()).unwrap();
    let truth = unit_cost(&rows(&flat, 2), &centers);
    for method in ["uniform", "cs"] {
        let costs: Vec<f64> = (0..20_000u64)
            .map(|seed| {
                let cfg = SamplerConfig::new(60, seed);
                let c = match method {
                    "uniform" => uniform_coreset(&x, &cfg),
                    _ => sensitivity_coreset(&x, &cfg, 3, &div),
                }
                .unwrap();
                quantization_error(&c, &q, &div).unwrap()
            })
            .collect();
        let (m, se) = mean_se(&costs);
        assert!(
            (m - truth).abs() < 5.0 * se,
            "{method}: mean {m} truth {truth} se {se}"
        );
    }
}

#[test]
fn summaries_and_merge_by_hand() {
    let parts = split();
    let s = summarize_partition(&parts[1]);
    assert_eq!(
        (s.count, s.coord_sums.clone(), s.coord_sq_sums.clone()),
        (1, vec![3.0], vec![9.0])
    );
    let g = merge_summaries(&parts.iter().map(summarize_partition).collect::<Vec<_>>()).unwrap();
    assert_eq!(g.mean, vec![1.0]);
    assert_eq!(g.per_partition_central_cost, vec![2.0, 4.0]);
    assert_eq!(g.total_central_cost, 6.0);
}

#[test]
fn allocation_frequencies() {
    let parts = split();
    let g = merge_summaries(&parts.iter().map(summarize_partition).collect::<Vec<_>>()).unwrap();
    // one draw per seed: machine 0 is chosen with probability 1/2·2/3 + 1/2·1/3
    let mut first = 0u64;
    let mut uniform_first = 0u64;
    for seed in 0..DRAWS {
        let a = allocate_samples(&g, 1, seed).unwrap();
        assert_eq!(a.total(), 1);
        first += (a.uniform_counts[0] + a.nonuniform_counts[0]) as u64;
        uniform_first += a.uniform_counts[0] as u64;
    }
    assert!(within(first, DRAWS, 0.5, 5.0), "{first}");
    // E[u_0] = m/2 · |X_0|/n
    assert!(
        within(uniform_first, DRAWS, 1.0 / 3.0, 5.0),
        "{uniform_first}"
    );
}

#[test]
fn worker_weights_use_the_global_proposal() {
    let parts = split();
    let g = merge_summaries(&parts.iter().map(summarize_partition).collect::<Vec<_>>()).unwrap();
    let m = 4;
    let far = partition_sample(&parts[1], &g, 0, 1, m, 0).unwrap();
    assert_eq!(
        (far[0].point.clone(), far[0].weight),
        (vec![3.0], 1.0 / (m as f64 * 0.5))
    );
    let near = partition_sample(&parts[0], &g, 1, 0, m, 0).unwrap();
    assert_eq!(
        (near[0].point.clone(), near[0].weight),
        (vec![0.0], 1.0 / (m as f64 * 0.25))
    );
}

#[test]
fn protocol_frequencies_on_three_points() {
    let parts = split();
    let div = Divergence::squared_euclidean();
    let mut counts = [0u64; 3];
    for seed in 0..100 {
        let run = run_protocol(&parts, 1000, seed, &div).unwrap();
        for s in run.sources {
            counts[s] += 1;
        }
    }
    let total: u64 = counts.iter().sum();
    for (c, p) in counts.iter().zip([0.25, 0.25, 0.5]) {
        assert!(within(*c, total, p, 3.0), "{counts:?}");
    }
}

#[test]
fn kl_sandwich_by_random_search() {
    let (lo, hi) = (0.2, 5.0);
    let mut r = rng(11);
    for _ in 0..100_000 {
        let d = 3;
        let x: Vec<f64> = (0..d)
            .map(|_| rand::Rng::random_range(&mut r, lo..=hi))
            .collect();
        let y: Vec<f64> = (0..d)
            .map(|_| rand::Rng::random_range(&mut r, lo..=hi))
            .collect();
        let e = sq_dist(&x, &y);
        let (upper_kl, mu_kl) = (e / (2.0 * lo), lo / hi);
        let (upper_is, mu_is) = (e / (2.0 * lo * lo), (lo / hi) * (lo / hi));
        let (a, b) = (kl(&x, &y), itakura_saito(&x, &y));
        let slack = 1e-12 * (1.0 + upper_is);
        assert!(
            mu_kl * upper_kl <= a + slack && a <= upper_kl + slack,
            "kl {x:?} {y:?}"
        );
        assert!(
            mu_is * upper_is <= b + slack && b <= upper_is + slack,
            "is {x:?} {y:?}"
        );
    }
}

#[test]
fn library_divergences_match_the_formulas() {
    let kl_div = Divergence::generalized_kl();
    let is_div = Divergence::itakura_saito();
    let mut r = rng(5);
    for _ in 0..1000 {
        let x: Vec<f64> = (0..4)
            .map(|_| rand::Rng::random_range(&mut r, 0.01..10.0))
            .collect();
        let y: Vec<f64> = (0..4)
            .map(|_| rand::Rng::random_range(&mut r, 0.01..10.0))
            .collect();
        let (a, b) = (kl_div.eval(&x, &y).unwrap(), kl(&x, &y));
        assert!((a - b).abs() <= 1e-9 * (1.0 + b), "{a} {b}");
        let (a, b) = (is_div.eval(&x, &y).unwrap(), itakura_saito(&x, &y));
        assert!((a - b).abs() <= 1e-9 * (1.0 + b), "{a} {b}");
    }
    assert!(
        (kl_div.eval(&[2.0, 1.0], &[1.0, 1.0]).unwrap() - (2.0 * 2f64.ln() - 1.0)).abs() < 1e-12
    );
}

#[test]
fn mean_minimizes_bregman_cost_on_a_grid() {
    let points = [0.3, 0.9, 1.7, 2.2, 4.0];
    let weights = [1.0, 2.5, 0.5, 1.0, 3.0];
    let wsum: f64 = weights.iter().sum();
    let mean = points.iter().zip(&weights).map(|(p, w)| p * w).sum::<f64>() / wsum;
    let step = 1e-4;
    for d in [kl as fn(&[f64], &[f64]) -> f64, itakura_saito, sq_dist] {
        let total = |c: f64| {
            points
                .iter()
                .zip(&weights)
                .map(|(p, w)| w * d(&[*p], &[c]))
                .sum::<f64>()
        };
        let best = (1..=50_000)
            .map(|i| 0.2 + i as f64 * step)
            .min_by(|a, b| total(*a).total_cmp(&total(*b)))
            .unwrap();
        assert!((best - mean).abs() <= step, "grid {best} mean {mean}");
    }
}

#[test]
fn unit_coreset_matches_dataset() {
    let flat = random_blobs(1, 200, 3, 4);
    let x = Dataset::from_flat(3, flat).unwrap();
    assert_eq!(Coreset::unit(&x).total_weight(), 200.0);
}
