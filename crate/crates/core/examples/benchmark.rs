//! Relative error and speedup of the three summaries against the full data.
//!
//! ```text
//! cargo run --release --example benchmark
//! ```

use corekit::evaluation::{
    benchmark, format_table, write_results_csv, BenchMethod, BenchmarkConfig, GeneratorSpec,
};
use corekit::rng::{stream, Purpose};
use corekit::Divergence;

fn main() -> corekit::Result<()> {
    let spec = GeneratorSpec::HeavyTailContaminated {
        dim: 10,
        fraction: 0.01,
        distance: 100.0,
        clusters: 5,
        tail_exponent: None,
    };
    let x = spec.sample(30_000, &mut stream(8, Purpose::Generator, 0))?;
    let cfg = BenchmarkConfig::new(
        vec![
            BenchMethod::Uniform,
            BenchMethod::Lwcs,
            BenchMethod::Cs,
            BenchMethod::Full,
        ],
        vec![200, 1000],
        vec![20],
        5,
        8,
    );
    let report = benchmark(&x, &cfg, &Divergence::squared_euclidean())?;
    print!("{}", format_table(&report));

    let path = std::env::temp_dir().join("corekit_example_bench.csv");
    write_results_csv(
        std::fs::File::create(&path).map_err(|source| corekit::Error::Io {
            path: path.clone(),
            source,
        })?,
        &report.results,
    )?;
    println!("per-run rows in {}", path.display());
    Ok(())
}
