//! Probe the coreset property and the solution-quality bound.

use corekit::evaluation::{estimate_required_epsilon, theorem1_gap, GeneratorSpec, ProbeConfig};
use corekit::rng::{stream, Purpose};
use corekit::sampling::{lightweight_coreset, SamplerConfig};
use corekit::solver::SolveConfig;
use corekit::Divergence;

fn main() -> corekit::Result<()> {
    let x =
        GeneratorSpec::standard_gaussian(2).sample(5000, &mut stream(4, Purpose::Generator, 0))?;
    let div = Divergence::squared_euclidean();
    let probes = ProbeConfig::new(5, 0).count(200);

    for m in [100, 400, 1600] {
        let c = lightweight_coreset(&x, &SamplerConfig::new(m, 1), &div)?;
        let r = estimate_required_epsilon(&x, &c, &probes, &div)?;
        let by_kind: Vec<String> = r
            .max_margin_by_kind
            .iter()
            .map(|(k, v)| format!("{k:?} {v:.3}"))
            .collect();
        println!("m={m}: eps >= {:.4} ({})", r.max_margin, by_kind.join(", "));
    }

    let c = lightweight_coreset(&x, &SamplerConfig::new(400, 2), &div)?;
    let g = theorem1_gap(&x, &c, &SolveConfig::new(5).restarts(5), &probes, &div)?;
    println!(
        "coreset solution {:.1} <= full solution {:.1} + 4·{:.3}·{:.1} = {:.1}: {}",
        g.lhs, g.full_cost, g.epsilon_hat, g.central_cost, g.rhs, g.holds
    );
    Ok(())
}
