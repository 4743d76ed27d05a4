//! Solve k-means on a coreset and evaluate the centers on the full data.

use std::time::Instant;

use corekit::evaluation::{format_percent, relative_error, GeneratorSpec};
use corekit::rng::{stream, Purpose};
use corekit::sampling::{lightweight_coreset, SamplerConfig};
use corekit::solver::{solve_kmeans, SolveConfig};
use corekit::{quantization_error, Divergence};

fn main() -> corekit::Result<()> {
    let means: Vec<Vec<f64>> = (0..8)
        .map(|i| vec![(i % 4) as f64 * 6.0, (i / 4) as f64 * 6.0, 0.0])
        .collect();
    let spec = GeneratorSpec::GaussianMixture {
        means,
        weights: vec![1.0; 8],
        std: 1.0,
    };
    let x = spec.sample(100_000, &mut stream(5, Purpose::Generator, 0))?;
    let div = Divergence::squared_euclidean();
    let cfg = SolveConfig::new(8).seed(1).restarts(3);

    let start = Instant::now();
    let full = solve_kmeans(&x, &cfg, &div)?;
    let full_time = start.elapsed().as_secs_f64();

    let start = Instant::now();
    let c = lightweight_coreset(&x, &SamplerConfig::new(2000, 1), &div)?;
    let sol = solve_kmeans(&c, &cfg, &div)?;
    let summary_time = start.elapsed().as_secs_f64();

    let cost = quantization_error(&x, &sol.centers, &div)?;
    let eta = relative_error(cost, full.cost)?;
    println!(
        "full data: cost {:.1} after {} Lloyd steps ({full_time:.3}s)",
        full.cost, full.iters
    );
    println!("coreset:   cost {cost:.1} on the full data ({summary_time:.3}s)");
    println!(
        "relative error {}, speedup {:.1}x",
        format_percent(eta),
        full_time / summary_time
    );
    Ok(())
}
