//! Quality metrics and experiments.

mod bench;
mod erm;
mod probes;

pub use bench::{
    benchmark, format_table, write_results_csv, BenchMethod, BenchmarkConfig, BenchmarkReport,
    BenchmarkResult, CellSummary, Timing, PAIRING,
};
pub use erm::{erm_experiment, ErmConfig, ErmProbe, ErmReport, GeneratorSpec};
pub use probes::{
    estimate_required_epsilon, exhaustive_kmeans, theorem1_gap, GapReport, Probe, ProbeConfig,
    ProbeKind, ProbeSet, PropertyReport,
};

use crate::divergence::Divergence;
use crate::error::{Error, Result};
use crate::model::{quantization_error, CenterSet, Coreset, Dataset};

/// `η = candidate / reference - 1`.
pub fn relative_error(cost_candidate: f64, cost_reference: f64) -> Result<f64> {
    if !(cost_reference > 0.0) {
        return Err(Error::ZeroReference);
    }
    Ok(cost_candidate / cost_reference - 1.0)
}

/// Relative error as a percentage with one decimal, e.g. `18.5%`.
pub fn format_percent(eta: f64) -> String {
    format!("{:.1}%", eta * 100.0)
}

/// Normalized coreset error for one center set:
///
/// ```text
/// |φ_X(Q) - φ_C(Q)| / (φ_X(Q)/2 + φ_X({μ})/2)
/// ```
///
/// `C` satisfies the lightweight coreset bound at `Q` for every `ε` at least
/// this large.
pub fn coreset_property_margin(
    x: &Dataset,
    c: &Coreset,
    q: &CenterSet,
    div: &Divergence,
) -> Result<f64> {
    let full = quantization_error(x, q, div)?;
    let central = quantization_error(x, &CenterSet::single(&x.mean())?, div)?;
    let summary = quantization_error(c, q, div)?;
    margin(full, summary, central)
}

pub(crate) fn margin(full: f64, summary: f64, central: f64) -> Result<f64> {
    let denom = 0.5 * full + 0.5 * central;
    if !(denom > 0.0) {
        return Err(Error::Degenerate(
            "both the probe cost and the central cost are zero",
        ));
    }
    Ok((full - summary).abs() / denom)
}
