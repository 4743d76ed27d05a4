//! Divergences used as the clustering distance.
//!
//! Besides the squared Euclidean distance, three μ-similar divergences are
//! supported for hard clustering: a squared Mahalanobis distance, the
//! generalized KL divergence and the Itakura-Saito distance. Each carries a
//! *companion* squared Mahalanobis metric `d_A` and a similarity constant
//! `mu_sim` with
//!
//! ```text
//! mu_sim * d_A(x, y) <= d(x, y) <= d_A(x, y)
//! ```
//!
//! on the divergence's domain. Coreset sampling measures distances to the
//! mean with the companion metric.
//!
//! Both KL-type divergences are Bregman divergences whose generator has a
//! second derivative bounded on the domain box `[lower, upper]`:
//! `t ln t` has `1/t` and `-ln t` has `1/t²`. A second-order Taylor expansion
//! with Lagrange remainder then gives the default companion
//! `A = I * sup(φ'')/2` and `mu_sim = inf(φ'')/sup(φ'')`.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{DomainViolation, Error, Result};
use crate::model::PointSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DivergenceKind {
    SquaredEuclidean,
    SquaredMahalanobis,
    GeneralizedKl,
    ItakuraSaito,
}

impl DivergenceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DivergenceKind::SquaredEuclidean => "squared_euclidean",
            DivergenceKind::SquaredMahalanobis => "squared_mahalanobis",
            DivergenceKind::GeneralizedKl => "generalized_kl",
            DivergenceKind::ItakuraSaito => "itakura_saito",
        }
    }

    fn needs_box(self) -> bool {
        matches!(
            self,
            DivergenceKind::GeneralizedKl | DivergenceKind::ItakuraSaito
        )
    }
}

impl fmt::Display for DivergenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for DivergenceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "squared_euclidean" | "euclidean" => Ok(DivergenceKind::SquaredEuclidean),
            "squared_mahalanobis" | "mahalanobis" => Ok(DivergenceKind::SquaredMahalanobis),
            "generalized_kl" | "kl" => Ok(DivergenceKind::GeneralizedKl),
            "itakura_saito" | "is" => Ok(DivergenceKind::ItakuraSaito),
            other => Err(Error::Config(format!("unknown divergence kind '{other}'"))),
        }
    }
}

/// Per-coordinate box `[lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainBox {
    pub lower: f64,
    pub upper: f64,
}

impl DomainBox {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower > 0.0 && lower <= upper && upper.is_finite()) {
            return Err(Error::Config(format!(
                "domain box must satisfy 0 < lower <= upper < inf, got [{lower}, {upper}]"
            )));
        }
        Ok(Self { lower, upper })
    }

    #[inline]
    pub fn contains(&self, v: f64) -> bool {
        v >= self.lower && v <= self.upper
    }
}

/// A squared Mahalanobis metric `(x-y)ᵀ A (x-y)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Metric {
    /// `A = scale * I`, valid in any dimension.
    ScaledIdentity(f64),
    /// Dense symmetric positive-definite `A`, stored with its Cholesky factor.
    Full {
        dim: usize,
        matrix: Vec<f64>,
        /// Upper-triangular `Lᵀ`, row-major, where `A = L Lᵀ`.
        factor_t: Vec<f64>,
    },
}

impl Metric {
    pub fn identity() -> Self {
        Metric::ScaledIdentity(1.0)
    }

    pub fn scaled_identity(scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::Config(format!(
                "metric scale must be positive, got {scale}"
            )));
        }
        Ok(Metric::ScaledIdentity(scale))
    }

    /// Dense metric from a row-major `dim x dim` matrix.
    pub fn full(dim: usize, matrix: Vec<f64>) -> Result<Self> {
        if dim == 0 || matrix.len() != dim * dim {
            return Err(Error::Config(format!(
                "matrix has {} entries, expected {dim}x{dim}",
                matrix.len()
            )));
        }
        for i in 0..dim {
            for j in 0..i {
                let (a, b) = (matrix[i * dim + j], matrix[j * dim + i]);
                if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
                    return Err(Error::Config(format!(
                        "matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        let chol = DMatrix::from_row_slice(dim, dim, &matrix)
            .cholesky()
            .ok_or_else(|| Error::Config("matrix is not positive definite".into()))?;
        let l = chol.l();
        let mut factor_t = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in i..dim {
                factor_t[i * dim + j] = l[(j, i)];
            }
        }
        Ok(Metric::Full {
            dim,
            matrix,
            factor_t,
        })
    }

    /// Dimension the metric is tied to, if any.
    pub fn dim(&self) -> Option<usize> {
        match self {
            Metric::ScaledIdentity(_) => None,
            Metric::Full { dim, .. } => Some(*dim),
        }
    }

    /// Entry `A[i][j]` for a space of dimension `d`.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        match self {
            Metric::ScaledIdentity(s) => {
                if i == j {
                    *s
                } else {
                    0.0
                }
            }
            Metric::Full { dim, matrix, .. } => matrix[i * dim + j],
        }
    }

    #[inline]
    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            Metric::ScaledIdentity(s) => s * squared_euclidean(x, y),
            Metric::Full { dim, factor_t, .. } => {
                let d = *dim;
                let mut total = 0.0;
                for i in 0..d {
                    let row = &factor_t[i * d..(i + 1) * d];
                    let mut s = 0.0;
                    for j in i..d {
                        s += row[j] * (x[j] - y[j]);
                    }
                    total += s * s;
                }
                total
            }
        }
    }
}

#[inline]
pub fn squared_euclidean(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| {
            let t = a - b;
            t * t
        })
        .sum()
}

/// `t - ln(1 + t)`, accurate near 0 and never negative.
#[inline]
fn t_minus_log1p(t: f64) -> f64 {
    (t - t.ln_1p()).max(0.0)
}

/// The `(A, mu_sim)` pair bounding a divergence from both sides.
#[derive(Debug, Clone, PartialEq)]
pub struct Companion {
    pub metric: Metric,
    pub mu_sim: f64,
}

impl Companion {
    pub fn new(metric: Metric, mu_sim: f64) -> Result<Self> {
        if !(mu_sim > 0.0 && mu_sim <= 1.0) {
            return Err(Error::Config(format!(
                "mu_sim must lie in (0, 1], got {mu_sim}"
            )));
        }
        Ok(Self { metric, mu_sim })
    }
}

/// An immutable divergence descriptor.
#[derive(Debug, Clone, PartialEq)]
pub struct Divergence {
    kind: DivergenceKind,
    /// `A` of a squared Mahalanobis divergence.
    metric: Option<Metric>,
    domain: Option<DomainBox>,
    companion_override: Option<Companion>,
}

impl Default for Divergence {
    fn default() -> Self {
        Self::squared_euclidean()
    }
}

impl Divergence {
    pub fn squared_euclidean() -> Self {
        Self {
            kind: DivergenceKind::SquaredEuclidean,
            metric: None,
            domain: None,
            companion_override: None,
        }
    }

    pub fn squared_mahalanobis(metric: Metric) -> Self {
        Self {
            kind: DivergenceKind::SquaredMahalanobis,
            metric: Some(metric),
            domain: None,
            companion_override: None,
        }
    }

    /// Generalized KL, `Σ x ln(x/y) - x + y`. Set a domain box before sampling.
    pub fn generalized_kl() -> Self {
        Self {
            kind: DivergenceKind::GeneralizedKl,
            metric: None,
            domain: None,
            companion_override: None,
        }
    }

    /// Itakura-Saito, `Σ x/y - ln(x/y) - 1`. Set a domain box before sampling.
    pub fn itakura_saito() -> Self {
        Self {
            kind: DivergenceKind::ItakuraSaito,
            metric: None,
            domain: None,
            companion_override: None,
        }
    }

    pub fn with_domain(mut self, lower: f64, upper: f64) -> Result<Self> {
        if !self.kind.needs_box() {
            return Err(Error::Config(format!(
                "{} has an unrestricted domain",
                self.kind
            )));
        }
        self.domain = Some(DomainBox::new(lower, upper)?);
        Ok(self)
    }

    /// Replaces the derived `(A, mu_sim)` companion.
    pub fn with_companion(mut self, companion: Companion) -> Self {
        self.companion_override = Some(companion);
        self
    }

    pub fn kind(&self) -> DivergenceKind {
        self.kind
    }

    pub fn domain(&self) -> Option<DomainBox> {
        self.domain
    }

    /// True when every real vector is in the domain.
    pub fn is_unrestricted(&self) -> bool {
        !self.kind.needs_box()
    }

    /// Dimension the divergence is tied to, if any.
    pub fn dim(&self) -> Option<usize> {
        self.metric.as_ref().and_then(Metric::dim)
    }

    /// Evaluates `d(x, y)` after checking dimensions and domain.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: y.len(),
            });
        }
        self.check_dim(x.len())?;
        self.check_point(0, x)?;
        self.check_point(1, y)?;
        Ok(self.eval_unchecked(x, y))
    }

    /// Evaluates `d(x, y)` assuming both arguments were validated.
    #[inline]
    pub fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        match self.kind {
            DivergenceKind::SquaredEuclidean => squared_euclidean(x, y),
            DivergenceKind::SquaredMahalanobis => self
                .metric
                .as_ref()
                .expect("mahalanobis divergence always carries a metric")
                .eval(x, y),
            // x ln(x/y) - x + y = x * (r - 1 - ln r) with r = y/x
            DivergenceKind::GeneralizedKl => x
                .iter()
                .zip(y)
                .map(|(&a, &b)| a * t_minus_log1p(b / a - 1.0))
                .sum(),
            DivergenceKind::ItakuraSaito => x
                .iter()
                .zip(y)
                .map(|(&a, &b)| t_minus_log1p(a / b - 1.0))
                .sum(),
        }
    }

    pub fn check_dim(&self, d: usize) -> Result<()> {
        match self.dim() {
            Some(expected) if expected != d => Err(Error::DimensionMismatch { expected, got: d }),
            _ => Ok(()),
        }
    }

    /// Checks one point against the domain; `row` is only used for reporting.
    pub fn check_point(&self, row: usize, p: &[f64]) -> Result<(), DomainViolation> {
        if !self.kind.needs_box() {
            return Ok(());
        }
        let (lower, upper) = match self.domain {
            Some(b) => (b.lower, b.upper),
            None => (0.0, f64::INFINITY),
        };
        for (column, &value) in p.iter().enumerate() {
            let inside = match self.domain {
                Some(b) => b.contains(value),
                None => value > 0.0 && value.is_finite(),
            };
            if !inside {
                return Err(DomainViolation {
                    row,
                    column,
                    value,
                    lower,
                    upper,
                });
            }
        }
        Ok(())
    }

    /// Reports the first coordinate of `set` outside the domain, if any.
    pub fn validate_domain<S: PointSet + ?Sized>(&self, set: &S) -> Result<(), DomainViolation> {
        if !self.kind.needs_box() {
            return Ok(());
        }
        for i in 0..set.len() {
            self.check_point(i, set.point(i))?;
        }
        Ok(())
    }

    /// The `(A, mu_sim)` pair used for sampling and analysis.
    pub fn mahalanobis_companion(&self) -> Result<Companion> {
        if let Some(c) = &self.companion_override {
            return Ok(c.clone());
        }
        match self.kind {
            DivergenceKind::SquaredEuclidean => Ok(Companion {
                metric: Metric::identity(),
                mu_sim: 1.0,
            }),
            DivergenceKind::SquaredMahalanobis => Ok(Companion {
                metric: self
                    .metric
                    .clone()
                    .expect("mahalanobis divergence always carries a metric"),
                mu_sim: 1.0,
            }),
            DivergenceKind::GeneralizedKl => {
                let b = self.require_box()?;
                Companion::new(Metric::scaled_identity(0.5 / b.lower)?, b.lower / b.upper)
            }
            DivergenceKind::ItakuraSaito => {
                let b = self.require_box()?;
                Companion::new(
                    Metric::scaled_identity(0.5 / (b.lower * b.lower))?,
                    (b.lower * b.lower) / (b.upper * b.upper),
                )
            }
        }
    }

    fn require_box(&self) -> Result<DomainBox> {
        self.domain.ok_or_else(|| {
            Error::Config(format!(
                "{} requires a domain box [lower, upper]",
                self.kind
            ))
        })
    }
}

/// Textual divergence configuration, as accepted on the command line.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DivergenceConfig {
    pub kind: Option<DivergenceKind>,
    /// Row-major matrix: `A` for Mahalanobis, the companion `A` for KL/IS.
    pub matrix: Option<Vec<f64>>,
    pub domain: Option<(f64, f64)>,
    pub mu_sim: Option<f64>,
}

impl DivergenceConfig {
    pub fn build(&self, dim: usize) -> Result<Divergence> {
        let kind = self.kind.unwrap_or(DivergenceKind::SquaredEuclidean);
        let dense = |m: &Vec<f64>| Metric::full(dim, m.clone());
        let mut div = match kind {
            DivergenceKind::SquaredEuclidean => Divergence::squared_euclidean(),
            DivergenceKind::SquaredMahalanobis => {
                let m = self
                    .matrix
                    .as_ref()
                    .ok_or_else(|| Error::Config("squared_mahalanobis requires a matrix".into()))?;
                Divergence::squared_mahalanobis(dense(m)?)
            }
            DivergenceKind::GeneralizedKl => Divergence::generalized_kl(),
            DivergenceKind::ItakuraSaito => Divergence::itakura_saito(),
        };
        if let Some((lo, hi)) = self.domain {
            div = div.with_domain(lo, hi)?;
        }
        let companion_matrix = match kind {
            DivergenceKind::GeneralizedKl | DivergenceKind::ItakuraSaito => self.matrix.as_ref(),
            _ => None,
        };
        if companion_matrix.is_some() || self.mu_sim.is_some() {
            let base = div.mahalanobis_companion();
            let metric = match (companion_matrix, &base) {
                (Some(m), _) => dense(m)?,
                (None, Ok(c)) => c.metric.clone(),
                (None, Err(_)) => {
                    return Err(Error::Config(
                        "mu_sim override needs a companion matrix or a domain box".into(),
                    ))
                }
            };
            let mu = match (self.mu_sim, &base) {
                (Some(mu), _) => mu,
                (None, Ok(c)) => c.mu_sim,
                (None, Err(_)) => 1.0,
            };
            div = div.with_companion(Companion::new(metric, mu)?);
        }
        Ok(div)
    }
}
