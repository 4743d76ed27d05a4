//! Lightweight coresets for k-means clustering.
//!
//! The crate builds small weighted summaries of a dataset by importance
//! sampling: half of the proposal mass is uniform and half is proportional
//! to the squared distance to the dataset mean. Around that construction it
//! provides
//!
//! - [`model`]: datasets, weighted sets, center sets and the quantization error,
//! - [`divergence`]: squared Euclidean and μ-similar Bregman divergences,
//! - [`sampling`]: lightweight, uniform and sensitivity-based coresets,
//! - [`distributed`]: the two-round construction over partitioned data,
//! - [`solver`]: weighted k-means++ seeding and Lloyd iterations,
//! - [`evaluation`]: coreset-property probes, solution-quality gaps, a
//!   statistical k-means experiment and a benchmark harness,
//! - [`cli`]: the `corekit` command-line driver.

// `!(x > 0.0)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod distributed;
pub mod divergence;
pub mod error;
pub mod evaluation;
pub mod model;
pub mod numeric;
pub mod rng;
pub mod sampling;
pub mod solver;

pub use divergence::{Companion, Divergence, DivergenceKind, Metric};
pub use error::{DomainViolation, Error, Result};
pub use model::{
    assign_points, central_cost, dataset_mean, load_dataset, quantization_error, CenterSet,
    Coreset, Dataset, DatasetStats, PointSet,
};
