//! Coresets and clustering under generalized KL and Itakura-Saito
//! divergences on a bounded domain.

use corekit::evaluation::{estimate_required_epsilon, ProbeConfig};
use corekit::rng::{stream, Purpose};
use corekit::sampling::{lightweight_coreset, SamplerConfig};
use corekit::solver::{solve_kmeans, SolveConfig};
use corekit::{quantization_error, Dataset, Divergence};
use rand::Rng;

fn main() -> corekit::Result<()> {
    let mut rng = stream(2, Purpose::Generator, 0);
    // histograms-like positive data in [0.05, 3]
    let data: Vec<f64> = (0..20_000 * 3)
        .map(|i| {
            let base = [0.2, 1.0, 2.4][(i / 3) % 3];
            (base * (1.0 + 0.2 * (rng.random::<f64>() - 0.5))).clamp(0.05, 3.0)
        })
        .collect();
    let x = Dataset::from_flat(3, data)?;

    for div in [Divergence::generalized_kl(), Divergence::itakura_saito()] {
        let div = div.with_domain(0.05, 3.0)?;
        let companion = div.mahalanobis_companion()?;
        let c = lightweight_coreset(&x, &SamplerConfig::new(500, 1), &div)?;
        let sol = solve_kmeans(&c, &SolveConfig::new(3).seed(4), &div)?;
        let report = estimate_required_epsilon(&x, &c, &ProbeConfig::new(3, 0).count(40), &div)?;
        println!(
            "{}: mu = {:.4}, full-data cost of coreset solution {:.3}, max probe margin {:.3}",
            div.kind(),
            companion.mu_sim,
            quantization_error(&x, &sol.centers, &div)?,
            report.max_margin
        );
    }
    Ok(())
}
