//! Estimating the expected quantization error of a distribution from a
//! lightweight coreset of a sample, against a uniform sample of equal size.

use corekit::evaluation::{erm_experiment, ErmConfig, GeneratorSpec};

fn main() -> corekit::Result<()> {
    for (name, spec) in [
        ("gaussian", GeneratorSpec::standard_gaussian(1)),
        ("contaminated", GeneratorSpec::contaminated(1, 0.01, 100.0)),
    ] {
        let mut cfg = ErmConfig::new(spec, 50_000, 1000, 3, 1);
        cfg.truth_size = 200_000;
        cfg.probes = 40;
        let r = erm_experiment(&cfg)?;
        println!(
            "{name}: variance {:.2}, kurtosis {:.2}; eps coreset {:.4}, eps uniform {:.4}",
            r.variance_estimate, r.kurtosis_estimate, r.coreset_epsilon, r.uniform_epsilon
        );
    }
    Ok(())
}
