//! Build a lightweight coreset of a synthetic dataset and compare costs.
//!
//! ```text
//! cargo run --example lightweight_coreset
//! ```

use corekit::evaluation::GeneratorSpec;
use corekit::rng::{stream, Purpose};
use corekit::sampling::{
    lightweight_coreset, lwcs_distribution, save_coreset, CoresetHeader, SamplerConfig,
};
use corekit::{quantization_error, CenterSet, Divergence, PointSet};

fn main() -> corekit::Result<()> {
    let spec = GeneratorSpec::HeavyTailContaminated {
        dim: 4,
        fraction: 0.02,
        distance: 30.0,
        clusters: 3,
        tail_exponent: None,
    };
    let x = spec.sample(50_000, &mut stream(1, Purpose::Generator, 0))?;
    let div = Divergence::squared_euclidean();

    let q = lwcs_distribution(&x, &div)?;
    let (lo, hi) = q
        .probs()
        .iter()
        .fold((f64::MAX, 0.0f64), |(a, b), &p| (a.min(p), b.max(p)));
    println!("n = {}, proposal ranges over [{lo:.3e}, {hi:.3e}]", x.n());

    let cfg = SamplerConfig::new(1000, 7);
    let c = lightweight_coreset(&x, &cfg, &div)?;
    println!(
        "coreset: {} entries, total weight {:.1}",
        c.len(),
        c.total_weight()
    );

    for centers in [
        vec![vec![0.0; 4]],
        vec![vec![0.0; 4], vec![30.0, 0.0, 0.0, 0.0]],
    ] {
        let q = CenterSet::from_rows(centers)?;
        let full = quantization_error(&x, &q, &div)?;
        let approx = quantization_error(&c, &q, &div)?;
        println!(
            "{} centers: full {full:.4e}, coreset {approx:.4e}, ratio {:.4}",
            q.len(),
            approx / full
        );
    }

    let path = std::env::temp_dir().join("corekit_example_coreset.csv");
    save_coreset(
        &path,
        &c,
        &CoresetHeader {
            n: x.n(),
            m: cfg.m,
            seed: cfg.seed,
        },
    )?;
    println!("wrote {}", path.display());
    Ok(())
}
