//! Datasets, weighted sets, center sets and the quantization error.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::divergence::{Divergence, Metric};
use crate::error::{Error, Result};
use crate::numeric::{chunked_fold, chunked_sum, NeumaierSum};

/// Anything that can be clustered: a sequence of equal-length points with
/// nonnegative weights.
pub trait PointSet: Sync {
    fn len(&self) -> usize;

    fn dim(&self) -> usize;

    fn point(&self, i: usize) -> &[f64];

    fn weight(&self, i: usize) -> f64;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn total_weight(&self) -> f64 {
        chunked_sum(self.len(), |i| self.weight(i))
    }
}

/// Dense row-major point collection with `n >= 1` rows of `d >= 1` finite
/// coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    dim: usize,
    data: Vec<f64>,
}

impl Dataset {
    pub fn from_flat(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Empty("dataset has dimension 0"));
        }
        if data.is_empty() {
            return Err(Error::Empty("dataset has no points"));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: data.len() % dim,
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / dim,
                column: pos % dim,
            });
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * dim);
        for row in &rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_flat(dim, data)
    }

    /// One-dimensional dataset.
    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        Self::from_flat(1, values.to_vec())
    }

    pub fn n(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    /// Rows at `indices`, in order.
    pub fn select(&self, indices: &[usize]) -> Result<Dataset> {
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            data.extend_from_slice(self.point(i));
        }
        Dataset::from_flat(self.dim, data)
    }

    /// Coordinate-wise arithmetic mean.
    pub fn mean(&self) -> Vec<f64> {
        let sums = column_sums(&self.data, self.dim);
        let n = self.n() as f64;
        sums.into_iter().map(|s| s / n).collect()
    }
}

impl PointSet for Dataset {
    fn len(&self) -> usize {
        self.n()
    }

    fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    fn weight(&self, _i: usize) -> f64 {
        1.0
    }

    fn total_weight(&self) -> f64 {
        self.n() as f64
    }
}

/// Per-column sums of a row-major block, reduced in fixed chunk order.
pub fn column_sums(data: &[f64], dim: usize) -> Vec<f64> {
    let n = data.len() / dim;
    let partials = chunked_fold(
        n,
        |r| {
            let mut acc = vec![NeumaierSum::new(); dim];
            for i in r {
                for (a, &v) in acc.iter_mut().zip(&data[i * dim..(i + 1) * dim]) {
                    a.add(v);
                }
            }
            acc.iter().map(NeumaierSum::value).collect::<Vec<f64>>()
        },
        vec![NeumaierSum::new(); dim],
        |mut acc, part| {
            for (a, v) in acc.iter_mut().zip(part) {
                a.add(v);
            }
            acc
        },
    );
    partials.iter().map(NeumaierSum::value).collect()
}

/// Weighted point collection, e.g. the output of a coreset construction.
///
/// Zero weights are legal and contribute nothing to any cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coreset {
    dim: usize,
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl Coreset {
    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            points: Vec::new(),
            weights: Vec::new(),
        }
    }

    pub fn new(dim: usize, points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Empty("coreset has dimension 0"));
        }
        if points.len() != weights.len() * dim {
            return Err(Error::DimensionMismatch {
                expected: weights.len() * dim,
                got: points.len(),
            });
        }
        if let Some(pos) = points.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / dim,
                column: pos % dim,
            });
        }
        if let Some(i) = weights.iter().position(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "coreset weight {i} is {}, expected a finite nonnegative value",
                weights[i]
            )));
        }
        Ok(Self {
            dim,
            points,
            weights,
        })
    }

    /// Every point of `x` with weight 1.
    pub fn unit(x: &Dataset) -> Self {
        Self {
            dim: x.dim,
            points: x.data.clone(),
            weights: vec![1.0; x.n()],
        }
    }

    pub fn push(&mut self, point: &[f64], weight: f64) {
        assert_eq!(point.len(), self.dim, "point dimension");
        debug_assert!(weight >= 0.0);
        self.points.extend_from_slice(point);
        self.weights.push(weight);
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn points_flat(&self) -> &[f64] {
        &self.points
    }

    pub fn entries(&self) -> impl ExactSizeIterator<Item = (&[f64], f64)> + '_ {
        self.points
            .chunks_exact(self.dim)
            .zip(self.weights.iter().copied())
    }

    /// Multiplies every weight by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            dim: self.dim,
            points: self.points.clone(),
            weights: self.weights.iter().map(|w| w * factor).collect(),
        }
    }

    /// Collapses bitwise-equal points into one entry carrying the summed
    /// weight. First occurrences keep their relative order.
    pub fn merge_duplicates(&self) -> Self {
        use std::collections::HashMap;
        let mut slot: HashMap<Vec<u64>, usize> = HashMap::new();
        let mut out = Coreset::empty(self.dim);
        for (p, w) in self.entries() {
            let key: Vec<u64> = p.iter().map(|v| v.to_bits()).collect();
            match slot.get(&key) {
                Some(&j) => out.weights[j] += w,
                None => {
                    slot.insert(key, out.weights.len());
                    out.push(p, w);
                }
            }
        }
        out
    }
}

impl PointSet for Coreset {
    fn len(&self) -> usize {
        self.weights.len()
    }

    fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }
}

/// Between 1 and k centers in `R^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CenterSet {
    dim: usize,
    data: Vec<f64>,
}

impl CenterSet {
    pub fn from_flat(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || data.is_empty() {
            return Err(Error::Empty("center set needs at least one center"));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: data.len() % dim,
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / dim,
                column: pos % dim,
            });
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Config("centers have differing dimensions".into()));
        }
        Self::from_flat(dim, rows.concat())
    }

    /// One-dimensional centers.
    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        Self::from_flat(1, values.to_vec())
    }

    pub fn single(center: &[f64]) -> Result<Self> {
        Self::from_flat(center.len(), center.to_vec())
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn center(&self, j: usize) -> &[f64] {
        &self.data[j * self.dim..(j + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    /// Union of two center sets (duplicates kept).
    pub fn union(&self, other: &CenterSet) -> Result<CenterSet> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        CenterSet::from_flat(self.dim, data)
    }
}

/// Mean of a dataset and its cost against that mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub mean: Vec<f64>,
    pub central_cost: f64,
}

impl DatasetStats {
    /// `central_cost` is measured with the divergence's companion metric.
    pub fn compute(x: &Dataset, div: &Divergence) -> Result<Self> {
        Ok(Self {
            mean: dataset_mean(x),
            central_cost: central_cost(x, div)?,
        })
    }
}

/// Loads a headerless CSV of 64-bit reals, one point per row.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let (dim, data) = parse_numeric_csv(file, path)?;
    Dataset::from_flat(dim, data)
}

/// Parses numeric CSV rows. Lines starting with `#` are skipped. Returns the
/// field count and the row-major values.
pub fn parse_numeric_csv<R: Read>(reader: R, path: &Path) -> Result<(usize, Vec<f64>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut dim = 0usize;
    let mut data = Vec::new();
    let mut rows = 0usize;
    for record in rdr.records() {
        let record = record.map_err(|e| Error::Format {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let row = record.position().map_or(rows + 1, |p| p.line() as usize);
        if rows == 0 {
            dim = record.len();
        } else if record.len() != dim {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                row,
                column: record.len().min(dim) + 1,
                message: format!("expected {dim} fields, found {}", record.len()),
            });
        }
        for (c, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                row,
                column: c + 1,
                message: format!("'{field}' is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    row,
                    column: c + 1,
                    message: format!("'{field}' is not finite"),
                });
            }
            data.push(v);
        }
        rows += 1;
    }
    if rows == 0 || dim == 0 {
        return Err(Error::Format {
            path: path.to_path_buf(),
            message: "file contains no data rows".into(),
        });
    }
    Ok((dim, data))
}

/// Coordinate-wise mean of `x`.
pub fn dataset_mean(x: &Dataset) -> Vec<f64> {
    x.mean()
}

fn check_compatible<S: PointSet + ?Sized>(s: &S, q: &CenterSet, div: &Divergence) -> Result<()> {
    if s.dim() != q.dim() {
        return Err(Error::DimensionMismatch {
            expected: s.dim(),
            got: q.dim(),
        });
    }
    div.check_dim(s.dim())?;
    div.validate_domain(s)?;
    for (j, c) in q.iter().enumerate() {
        div.check_point(j, c)?;
    }
    Ok(())
}

/// Index and divergence of the nearest center; ties go to the lowest index.
#[inline]
pub fn nearest(p: &[f64], q: &CenterSet, div: &Divergence) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in q.iter().enumerate() {
        let d = div.eval_unchecked(p, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

pub(crate) fn cost_unchecked<S: PointSet + ?Sized>(s: &S, q: &CenterSet, div: &Divergence) -> f64 {
    chunked_sum(s.len(), |i| {
        let w = s.weight(i);
        if w == 0.0 {
            0.0
        } else {
            w * nearest(s.point(i), q, div).1
        }
    })
}

/// Weighted quantization error `Σ w(x) min_{c∈Q} d(x, c)`.
pub fn quantization_error<S: PointSet + ?Sized>(
    s: &S,
    q: &CenterSet,
    div: &Divergence,
) -> Result<f64> {
    check_compatible(s, q, div)?;
    Ok(cost_unchecked(s, q, div))
}

/// Cost of `x` against its own mean, measured with the companion metric of
/// `div` (plain squared Euclidean for the default divergence).
pub fn central_cost(x: &Dataset, div: &Divergence) -> Result<f64> {
    div.validate_domain(x)?;
    let metric = div.mahalanobis_companion()?.metric;
    if let Some(d) = metric.dim() {
        if d != x.dim() {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: x.dim(),
            });
        }
    }
    let mean = x.mean();
    Ok(metric_cost_to(x, &mean, &metric))
}

pub(crate) fn metric_cost_to<S: PointSet + ?Sized>(s: &S, center: &[f64], metric: &Metric) -> f64 {
    chunked_sum(s.len(), |i| s.weight(i) * metric.eval(s.point(i), center))
}

/// Nearest-center index per point; ties go to the lowest index.
pub fn assign_points<S: PointSet + ?Sized>(
    s: &S,
    q: &CenterSet,
    div: &Divergence,
) -> Result<Vec<usize>> {
    check_compatible(s, q, div)?;
    Ok(assign_unchecked(s, q, div)
        .into_iter()
        .map(|(j, _)| j)
        .collect())
}

pub(crate) fn assign_unchecked<S: PointSet + ?Sized>(
    s: &S,
    q: &CenterSet,
    div: &Divergence,
) -> Vec<(usize, f64)> {
    use rayon::prelude::*;
    (0..s.len())
        .into_par_iter()
        .map(|i| nearest(s.point(i), q, div))
        .collect()
}
