//! Weighted k-means++ seeding and Lloyd refinement.
//!
//! Both work on any [`PointSet`], so the same code clusters a full dataset or
//! a coreset. For every supported divergence the optimal single center of a
//! weighted cluster is its weighted arithmetic mean, which is what the Lloyd
//! update uses.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::divergence::Divergence;
use crate::error::{Error, Result};
use crate::model::{assign_unchecked, cost_unchecked, CenterSet, PointSet};
use crate::numeric::{chunked_fold, compensated_sum};
use crate::rng::{stream, Purpose};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub k: usize,
    pub seed: u64,
    pub max_iters: usize,
    /// Stop once the relative cost improvement of a Lloyd step falls below this.
    pub rel_tol: f64,
    pub restarts: usize,
    /// Return the seeding without Lloyd refinement.
    pub seeding_only: bool,
}

impl SolveConfig {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            seed: 0,
            max_iters: 100,
            rel_tol: 1e-4,
            restarts: 1,
            seeding_only: false,
        }
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    pub fn max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn seeding_only(mut self, yes: bool) -> Self {
        self.seeding_only = yes;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidParameter("k must be >= 1".into()));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidParameter("restarts must be >= 1".into()));
        }
        if !(self.rel_tol >= 0.0) {
            return Err(Error::InvalidParameter("rel_tol must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub centers: CenterSet,
    /// Cost on the input the solver was run on.
    pub cost: f64,
    /// Lloyd steps taken by the winning restart.
    pub iters: usize,
    pub restart: usize,
}

fn check_input<S: PointSet + ?Sized>(s: &S, div: &Divergence) -> Result<()> {
    if s.is_empty() {
        return Err(Error::Empty("cannot cluster an empty point set"));
    }
    div.check_dim(s.dim())?;
    div.validate_domain(s)?;
    if !(s.total_weight() > 0.0) {
        return Err(Error::Degenerate("all weights are zero"));
    }
    Ok(())
}

/// Index drawn with probability proportional to `scores`; `total` is their sum.
fn draw_proportional<R: Rng + ?Sized>(scores: &[f64], total: f64, rng: &mut R) -> usize {
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > 0.0 {
            acc += s;
            last_positive = i;
            if acc > target {
                return i;
            }
        }
    }
    last_positive
}

/// D² seeding (k-means++) on a weighted set, reproducible from `seed`.
pub fn dsq_seed<S: PointSet + ?Sized>(
    s: &S,
    k: usize,
    seed: u64,
    div: &Divergence,
) -> Result<CenterSet> {
    let mut rng = stream(seed, Purpose::Seeding, 0);
    dsq_seed_with(s, k, &mut rng, div)
}

/// D² seeding drawing from a caller-provided generator.
///
/// The first center is drawn proportionally to weight, every further center
/// proportionally to `weight * d(x, nearest chosen center)`. Once every
/// point sits on a center the remaining centers are drawn by weight alone, so
/// duplicates are possible.
pub fn dsq_seed_with<S, R>(s: &S, k: usize, rng: &mut R, div: &Divergence) -> Result<CenterSet>
where
    S: PointSet + ?Sized,
    R: Rng + ?Sized,
{
    use rayon::prelude::*;

    if k == 0 {
        return Err(Error::InvalidParameter("k must be >= 1".into()));
    }
    check_input(s, div)?;
    let n = s.len();
    let weights: Vec<f64> = (0..n).map(|i| s.weight(i)).collect();
    let total_weight = compensated_sum(weights.iter().copied());

    let first = draw_proportional(&weights, total_weight, rng);
    let mut centers = Vec::with_capacity(k * s.dim());
    centers.extend_from_slice(s.point(first));

    let mut min_d: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| div.eval_unchecked(s.point(i), s.point(first)))
        .collect();
    let mut scores = vec![0.0; n];

    for _ in 1..k {
        scores
            .par_iter_mut()
            .enumerate()
            .for_each(|(i, sc)| *sc = weights[i] * min_d[i]);
        let total = compensated_sum(scores.iter().copied());
        let pick = if total > 0.0 {
            draw_proportional(&scores, total, rng)
        } else {
            draw_proportional(&weights, total_weight, rng)
        };
        let c = s.point(pick);
        centers.extend_from_slice(c);
        min_d.par_iter_mut().enumerate().for_each(|(i, m)| {
            let d = div.eval_unchecked(s.point(i), c);
            if d < *m {
                *m = d;
            }
        });
    }
    CenterSet::from_flat(s.dim(), centers)
}

/// One Lloyd step: assign, then move every center to the weighted mean of
/// its cluster.
///
/// A center whose cluster carries no weight is moved onto the point with the
/// largest weighted divergence to its current center (ties to the lowest
/// index, each point used at most once). If no such point remains the center
/// stays where it is.
pub fn lloyd_step<S: PointSet + ?Sized>(
    s: &S,
    q: &CenterSet,
    div: &Divergence,
) -> Result<CenterSet> {
    check_input(s, div)?;
    if q.dim() != s.dim() {
        return Err(Error::DimensionMismatch {
            expected: s.dim(),
            got: q.dim(),
        });
    }
    for (j, c) in q.iter().enumerate() {
        div.check_point(j, c)?;
    }
    Ok(lloyd_step_unchecked(s, q, div))
}

fn lloyd_step_unchecked<S: PointSet + ?Sized>(s: &S, q: &CenterSet, div: &Divergence) -> CenterSet {
    let (k, d) = (q.len(), q.dim());
    let assignment = assign_unchecked(s, q, div);

    // per cluster: d coordinate sums followed by the weight
    let stride = d + 1;
    let sums = chunked_fold(
        s.len(),
        |r| {
            let mut acc = vec![0.0; k * stride];
            for i in r {
                let w = s.weight(i);
                if w == 0.0 {
                    continue;
                }
                let j = assignment[i].0;
                let slot = &mut acc[j * stride..(j + 1) * stride];
                for (a, &v) in slot.iter_mut().zip(s.point(i)) {
                    *a += w * v;
                }
                slot[d] += w;
            }
            acc
        },
        vec![0.0; k * stride],
        |mut acc, part| {
            for (a, p) in acc.iter_mut().zip(part) {
                *a += p;
            }
            acc
        },
    );

    let mut next = q.as_flat().to_vec();
    let mut empty = Vec::new();
    for j in 0..k {
        let slot = &sums[j * stride..(j + 1) * stride];
        let w = slot[d];
        if w > 0.0 {
            for (c, &v) in next[j * d..(j + 1) * d].iter_mut().zip(slot) {
                *c = v / w;
            }
        } else {
            empty.push(j);
        }
    }

    if !empty.is_empty() {
        let mut order: Vec<(usize, f64)> = assignment
            .iter()
            .enumerate()
            .map(|(i, &(_, dist))| (i, s.weight(i) * dist))
            .filter(|&(_, score)| score > 0.0)
            .collect();
        // largest first, lowest index among ties
        order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        for (j, (i, _)) in empty.into_iter().zip(order) {
            next[j * d..(j + 1) * d].copy_from_slice(s.point(i));
        }
    }
    CenterSet::from_flat(d, next).expect("lloyd step keeps a valid center set")
}

/// k-means++ seeding followed by Lloyd refinement, best of `restarts`.
///
/// Restart `r` seeds from stream `(seed, Seeding, r)`, so increasing the
/// restart count only ever adds candidates.
pub fn solve_kmeans<S: PointSet + ?Sized>(
    s: &S,
    cfg: &SolveConfig,
    div: &Divergence,
) -> Result<Solution> {
    cfg.validate()?;
    check_input(s, div)?;
    let mut best: Option<Solution> = None;
    for r in 0..cfg.restarts {
        let mut rng = stream(cfg.seed, Purpose::Seeding, r as u64);
        let mut centers = dsq_seed_with(s, cfg.k, &mut rng, div)?;
        let mut cost = cost_unchecked(s, &centers, div);
        let mut iters = 0;
        if !cfg.seeding_only {
            while iters < cfg.max_iters && cost > 0.0 {
                let next = lloyd_step_unchecked(s, &centers, div);
                let next_cost = cost_unchecked(s, &next, div);
                debug_assert!(
                    next_cost <= cost * (1.0 + 1e-9),
                    "lloyd step increased cost from {cost} to {next_cost}"
                );
                iters += 1;
                let improvement = (cost - next_cost) / cost;
                centers = next;
                cost = next_cost;
                if improvement < cfg.rel_tol {
                    break;
                }
            }
        }
        if best.as_ref().is_none_or(|b| cost < b.cost) {
            best = Some(Solution {
                centers,
                cost,
                iters,
                restart: r,
            });
        }
    }
    Ok(best.expect("restarts >= 1"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{quantization_error, Coreset, Dataset};

    fn euclid() -> Divergence {
        Divergence::squared_euclidean()
    }

    #[test]
    fn seeding_two_points_is_forced() {
        let x = Dataset::from_scalars(&[0.0, 3.0]).unwrap();
        for seed in 0..50 {
            let mut c = dsq_seed(&x, 2, seed, &euclid()).unwrap().as_flat().to_vec();
            c.sort_by(f64::total_cmp);
            assert_eq!(c, vec![0.0, 3.0]);
        }
    }

    #[test]
    fn seeding_identical_points_duplicates_centers() {
        let x = Dataset::from_scalars(&[2.0; 5]).unwrap();
        let q = dsq_seed(&x, 2, 1, &euclid()).unwrap();
        assert_eq!(q.as_flat(), &[2.0, 2.0]);
        assert_eq!(quantization_error(&x, &q, &euclid()).unwrap(), 0.0);
    }

    #[test]
    fn seeding_skips_zero_weight_points() {
        let c = Coreset::new(1, vec![5.0, 1.0, 9.0], vec![0.0, 1.0, 0.0]).unwrap();
        for seed in 0..20 {
            assert_eq!(dsq_seed(&c, 1, seed, &euclid()).unwrap().as_flat(), &[1.0]);
        }
    }

    #[test]
    fn seeding_rejects_empty_and_zero_k() {
        let c = Coreset::empty(1);
        assert!(dsq_seed(&c, 1, 0, &euclid()).is_err());
        let x = Dataset::from_scalars(&[1.0]).unwrap();
        assert!(dsq_seed(&x, 0, 0, &euclid()).is_err());
    }

    #[test]
    fn lloyd_examples() {
        let x = Dataset::from_scalars(&[0.0, 0.0, 3.0]).unwrap();
        let q = CenterSet::from_scalars(&[0.5, 2.5]).unwrap();
        let next = lloyd_step(&x, &q, &euclid()).unwrap();
        assert_eq!(next.as_flat(), &[0.0, 3.0]);
        assert_eq!(lloyd_step(&x, &next, &euclid()).unwrap(), next);
        let c = Coreset::new(1, vec![0.0, 4.0], vec![3.0, 1.0]).unwrap();
        let one = lloyd_step(&c, &CenterSet::from_scalars(&[10.0]).unwrap(), &euclid()).unwrap();
        assert_eq!(one.as_flat(), &[1.0]);
    }

    #[test]
    fn lloyd_reseeds_empty_cluster_to_farthest_point() {
        let x = Dataset::from_scalars(&[0.0, 1.0, 10.0]).unwrap();
        // center at 100 attracts nothing
        let q = CenterSet::from_scalars(&[0.0, 100.0]).unwrap();
        let next = lloyd_step(&x, &q, &euclid()).unwrap();
        assert_eq!(next.as_flat(), &[11.0 / 3.0, 10.0]);
        let before = quantization_error(&x, &q, &euclid()).unwrap();
        let after = quantization_error(&x, &next, &euclid()).unwrap();
        assert!(after <= before);
    }

    #[test]
    fn solve_three_points() {
        let x = Dataset::from_scalars(&[0.0, 0.0, 3.0]).unwrap();
        let sol = solve_kmeans(&x, &SolveConfig::new(2).seed(3), &euclid()).unwrap();
        assert_eq!(sol.cost, 0.0);
        let mut c = sol.centers.as_flat().to_vec();
        c.sort_by(f64::total_cmp);
        assert_eq!(c, vec![0.0, 3.0]);
    }

    #[test]
    fn k_at_least_distinct_points_gives_zero_cost() {
        let x = Dataset::from_rows(vec![
            vec![1.0, 2.0],
            vec![1.0, 2.0],
            vec![-3.0, 0.5],
            vec![4.0, 4.0],
        ])
        .unwrap();
        let sol = solve_kmeans(&x, &SolveConfig::new(4).seed(9), &euclid()).unwrap();
        assert_eq!(sol.cost, 0.0);
    }

    #[test]
    fn more_restarts_never_hurt() {
        let x = Dataset::from_flat(
            2,
            (0..200)
                .map(|i| ((i * 7919) % 113) as f64 * 0.37 + (i % 5) as f64 * 10.0)
                .collect(),
        )
        .unwrap();
        for seed in 0..5 {
            let one = solve_kmeans(&x, &SolveConfig::new(6).seed(seed), &euclid()).unwrap();
            let ten =
                solve_kmeans(&x, &SolveConfig::new(6).seed(seed).restarts(10), &euclid()).unwrap();
            assert!(ten.cost <= one.cost);
        }
    }

    #[test]
    fn config_validation() {
        assert!(SolveConfig::new(0).validate().is_err());
        assert!(SolveConfig::new(1).restarts(0).validate().is_err());
    }
}
