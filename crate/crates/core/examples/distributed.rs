//! The two-round construction over partitioned data.

use corekit::distributed::{partition_dataset, run_protocol, PartitionStrategy};
use corekit::evaluation::GeneratorSpec;
use corekit::rng::{stream, Purpose};
use corekit::{central_cost, dataset_mean, Divergence, PointSet};

fn main() -> corekit::Result<()> {
    let x = GeneratorSpec::contaminated(3, 0.01, 40.0)
        .sample(20_000, &mut stream(9, Purpose::Generator, 0))?;
    let div = Divergence::squared_euclidean();
    let parts = partition_dataset(&x, 8, PartitionStrategy::Contiguous)?;
    let run = run_protocol(&parts, 1000, 42, &div)?;

    println!("mean from summaries {:?}", run.stats.mean);
    println!("mean on one machine {:?}", dataset_mean(&x));
    println!(
        "central cost {:.3} vs {:.3}",
        run.stats.total_central_cost,
        central_cost(&x, &div)?
    );
    for (i, part) in parts.iter().enumerate() {
        println!(
            "machine {i}: {} points, {} uniform + {} weighted draws, {} passes",
            part.len(),
            run.allocation.uniform_counts[i],
            run.allocation.nonuniform_counts[i],
            run.worker_passes[i]
        );
    }
    println!(
        "{} entries, total weight {:.1}, {} messages",
        run.coreset.len(),
        run.coreset.total_weight(),
        run.messages
    );
    Ok(())
}
