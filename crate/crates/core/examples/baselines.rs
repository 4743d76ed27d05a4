//! Uniform, lightweight and sensitivity-based summaries of the same data,
//! scored on a shared probe set.

use std::time::Instant;

use corekit::evaluation::{GeneratorSpec, ProbeConfig, ProbeSet};
use corekit::rng::{stream, Purpose};
use corekit::sampling::{CoresetMethod, SamplerConfig};
use corekit::Divergence;

fn main() -> corekit::Result<()> {
    let spec = GeneratorSpec::HeavyTailContaminated {
        dim: 5,
        fraction: 0.01,
        distance: 50.0,
        clusters: 4,
        tail_exponent: None,
    };
    let x = spec.sample(40_000, &mut stream(3, Purpose::Generator, 0))?;
    let div = Divergence::squared_euclidean();
    let k = 10;
    let probes = ProbeSet::generate(&x, &ProbeConfig::new(k, 0).count(100), &div)?;

    println!(
        "{:<8} {:>6} {:>12} {:>12}",
        "method", "m", "max margin", "build ms"
    );
    for m in [200, 1000] {
        for method in CoresetMethod::ALL {
            let start = Instant::now();
            let c = method.construct(&x, &SamplerConfig::new(m, 11), k, &div)?;
            let ms = start.elapsed().as_secs_f64() * 1e3;
            let report = probes.evaluate(&c, &div)?;
            println!(
                "{:<8} {:>6} {:>12.4} {:>12.2}",
                method.as_str(),
                m,
                report.max_margin,
                ms
            );
        }
    }
    Ok(())
}
