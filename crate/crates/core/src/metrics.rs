//! Distance functions and pairwise distance matrices.
//!
//! Only `d(x, x) = 0` is required of a distance; none of the weighting code
//! relies on the triangle inequality. Squared Euclidean distance, which is
//! not a metric, is therefore a first-class choice.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Metric {
    Euclidean,
    SquaredEuclidean,
    AbsoluteScalar,
    /// Raw number of discordant pairs between two permutations.
    KendallTau,
}

impl Metric {
    pub const ALL: [Metric; 4] = [
        Metric::Euclidean,
        Metric::SquaredEuclidean,
        Metric::AbsoluteScalar,
        Metric::KendallTau,
    ];

    /// Name used on the command line.
    pub fn name(self) -> &'static str {
        match self {
            Metric::Euclidean => "euclidean",
            Metric::SquaredEuclidean => "sq-euclidean",
            Metric::AbsoluteScalar => "abs",
            Metric::KendallTau => "kendall-tau",
        }
    }

    fn accepts(self, kind: ElementKind) -> bool {
        matches!(
            (self, kind),
            (
                Metric::Euclidean | Metric::SquaredEuclidean,
                ElementKind::Vector
            ) | (Metric::AbsoluteScalar, ElementKind::Scalar)
                | (Metric::KendallTau, ElementKind::Ranking)
        )
    }

    fn check(self, kind: ElementKind) -> Result<()> {
        if self.accepts(kind) {
            Ok(())
        } else {
            Err(Error::IncompatibleMetric {
                metric: self.name(),
                element: kind.name(),
            })
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown metric `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ElementKind {
    Vector,
    Scalar,
    Ranking,
}

impl ElementKind {
    fn name(self) -> &'static str {
        match self {
            ElementKind::Vector => "vector",
            ElementKind::Scalar => "scalar",
            ElementKind::Ranking => "ranking",
        }
    }
}

/// A single consensus entity.
#[derive(Debug, Clone, PartialEq)]
pub enum Element {
    Vector(Vec<f64>),
    Scalar(f64),
    /// A permutation of `0..len`.
    Ranking(Vec<usize>),
}

impl Element {
    fn kind(&self) -> ElementKind {
        match self {
            Element::Vector(_) => ElementKind::Vector,
            Element::Scalar(_) => ElementKind::Scalar,
            Element::Ranking(_) => ElementKind::Ranking,
        }
    }
}

/// Distance between two elements under `metric`.
///
/// ```
/// use snap::metrics::{distance, Element, Metric};
///
/// let d = distance(
///     &Element::Vector(vec![0.0, 0.0]),
///     &Element::Vector(vec![3.0, 4.0]),
///     Metric::Euclidean,
/// )
/// .unwrap();
/// assert_eq!(d, 5.0);
/// ```
pub fn distance(a: &Element, b: &Element, metric: Metric) -> Result<f64> {
    metric.check(a.kind())?;
    metric.check(b.kind())?;
    match (a, b) {
        (Element::Vector(x), Element::Vector(y)) => {
            same_len(x.len(), y.len())?;
            Ok(vector_distance(x, y, metric))
        }
        (Element::Scalar(x), Element::Scalar(y)) => Ok((x - y).abs()),
        (Element::Ranking(x), Element::Ranking(y)) => {
            same_len(x.len(), y.len())?;
            validate_permutation(x)?;
            validate_permutation(y)?;
            Ok(kendall_tau(x, y) as f64)
        }
        _ => unreachable!("kinds were checked against the metric"),
    }
}

fn same_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

fn vector_distance(x: &[f64], y: &[f64], metric: Metric) -> f64 {
    match metric {
        Metric::Euclidean => linalg::dist(x, y),
        Metric::SquaredEuclidean => linalg::sq_dist(x, y),
        _ => unreachable!(),
    }
}

/// Number of item pairs ordered differently by the two permutations,
/// counted as inversions with a merge sort in `O(l log l)`.
///
/// Both inputs must be permutations of `0..l`; this is not rechecked here.
pub fn kendall_tau(a: &[usize], b: &[usize]) -> u64 {
    debug_assert_eq!(a.len(), b.len());
    let mut pos_in_b = vec![0usize; b.len()];
    for (pos, &item) in b.iter().enumerate() {
        pos_in_b[item] = pos;
    }
    let mut seq: Vec<usize> = a.iter().map(|&item| pos_in_b[item]).collect();
    let mut buf = vec![0usize; seq.len()];
    count_inversions(&mut seq, &mut buf)
}

fn count_inversions(seq: &mut [usize], buf: &mut [usize]) -> u64 {
    let n = seq.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut count = {
        let (left, right) = seq.split_at_mut(mid);
        let (lbuf, rbuf) = buf.split_at_mut(mid);
        count_inversions(left, lbuf) + count_inversions(right, rbuf)
    };
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if seq[i] <= seq[j] {
            buf[k] = seq[i];
            i += 1;
        } else {
            buf[k] = seq[j];
            // every remaining left element is greater than seq[j]
            count += (mid - i) as u64;
            j += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&seq[i..mid]);
    k += mid - i;
    buf[k..k + n - j].copy_from_slice(&seq[j..n]);
    seq.copy_from_slice(&buf[..n]);
    count
}

fn validate_permutation(p: &[usize]) -> Result<()> {
    let mut seen = vec![false; p.len()];
    for &v in p {
        if v >= p.len() {
            return Err(Error::InvalidPermutation(format!(
                "value {v} out of range for length {}",
                p.len()
            )));
        }
        if std::mem::replace(&mut seen[v], true) {
            return Err(Error::InvalidPermutation(format!("value {v} repeated")));
        }
    }
    Ok(())
}

/// A homogeneous, non-empty collection of consensus entities.
#[derive(Debug, Clone, PartialEq)]
pub enum Dataset {
    Vectors(Vec<Vec<f64>>),
    Scalars(Vec<f64>),
    Rankings(Vec<Vec<usize>>),
}

impl Dataset {
    pub fn vectors(points: Vec<Vec<f64>>) -> Result<Self> {
        let dim = points.first().ok_or(Error::Empty)?.len();
        for p in &points {
            same_len(dim, p.len())?;
        }
        Ok(Dataset::Vectors(points))
    }

    pub fn scalars(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty);
        }
        Ok(Dataset::Scalars(values))
    }

    pub fn rankings(perms: Vec<Vec<usize>>) -> Result<Self> {
        let len = perms.first().ok_or(Error::Empty)?.len();
        for p in &perms {
            same_len(len, p.len())?;
            validate_permutation(p)?;
        }
        Ok(Dataset::Rankings(perms))
    }

    pub fn len(&self) -> usize {
        match self {
            Dataset::Vectors(v) => v.len(),
            Dataset::Scalars(v) => v.len(),
            Dataset::Rankings(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn kind(&self) -> ElementKind {
        match self {
            Dataset::Vectors(_) => ElementKind::Vector,
            Dataset::Scalars(_) => ElementKind::Scalar,
            Dataset::Rankings(_) => ElementKind::Ranking,
        }
    }

    fn pair_distance(&self, i: usize, j: usize, metric: Metric) -> f64 {
        match self {
            Dataset::Vectors(v) => vector_distance(&v[i], &v[j], metric),
            Dataset::Scalars(v) => (v[i] - v[j]).abs(),
            Dataset::Rankings(v) => kendall_tau(&v[i], &v[j]) as f64,
        }
    }
}

/// Square, symmetric, zero-diagonal matrix of pairwise disagreements.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix(Matrix);

impl DistanceMatrix {
    /// Validates and wraps an existing matrix. Entries must be finite and
    /// non-negative, the diagonal zero, and the matrix symmetric up to
    /// `1e-12` relative to its largest entry.
    pub fn new(m: Matrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::MalformedMatrix(format!(
                "{}x{} is not square",
                m.rows(),
                m.cols()
            )));
        }
        if m.rows() == 0 {
            return Err(Error::Empty);
        }
        let mut max = 0.0f64;
        for &v in m.as_slice() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::MalformedMatrix(format!("invalid entry {v}")));
            }
            max = max.max(v);
        }
        for i in 0..m.rows() {
            if m[(i, i)] != 0.0 {
                return Err(Error::MalformedMatrix(format!(
                    "diagonal entry {i} is {}",
                    m[(i, i)]
                )));
            }
        }
        let asym = m.max_asymmetry();
        if asym > 1e-12 * max.max(f64::MIN_POSITIVE) {
            return Err(Error::MalformedMatrix(format!("asymmetry {asym:e}")));
        }
        Ok(Self(m))
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    pub fn len(&self) -> usize {
        self.0.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.0.row(i)
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }
}

/// Materializes all pairwise distances. Rows are evaluated in parallel; the
/// result depends only on the inputs.
pub fn pairwise_matrix(data: &Dataset, metric: Metric) -> Result<DistanceMatrix> {
    metric.check(data.kind())?;
    let n = data.len();
    if n == 0 {
        return Err(Error::Empty);
    }
    let mut buf = vec![0.0; n * n];
    buf.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        for (j, slot) in row.iter_mut().enumerate().skip(i + 1) {
            *slot = data.pair_distance(i, j, metric);
        }
    });
    for i in 0..n {
        for j in 0..i {
            buf[i * n + j] = buf[j * n + i];
        }
    }
    Ok(DistanceMatrix(Matrix::from_vec(n, n, buf)))
}
