//! Weighted PCA.
//!
//! The covariance is centered at the weighted mean and every point enters
//! with its agreement weight, so outliers that receive negligible weight
//! barely tilt the principal directions. Eigenvectors come from a cyclic
//! Jacobi solver, which is plenty for the small dimensions involved here.

use serde::Serialize;

use crate::aggregation::{snap_weights_for, weighted_mean};
use crate::error::{Error, Result};
use crate::linalg::{dot, norm, Matrix};
use crate::metrics::Metric;
use crate::weights::KernelSpec;

const MAX_SWEEPS: usize = 100;

/// `Σ w_i (x_i - x̄)(x_i - x̄)ᵀ` with `x̄ = Σ w_i x_i`.
pub fn weighted_covariance(points: &[Vec<f64>], w: &[f64]) -> Result<Matrix> {
    let center = weighted_mean(points, w)?;
    Ok(covariance_about(points, w, &center))
}

fn covariance_about(points: &[Vec<f64>], w: &[f64], center: &[f64]) -> Matrix {
    let m = center.len();
    let mut cov = Matrix::zeros(m, m);
    let mut diff = vec![0.0; m];
    for (p, &wi) in points.iter().zip(w) {
        if wi == 0.0 {
            continue;
        }
        for ((d, x), c) in diff.iter_mut().zip(p).zip(center) {
            *d = x - c;
        }
        for a in 0..m {
            let wa = wi * diff[a];
            for b in a..m {
                cov[(a, b)] += wa * diff[b];
            }
        }
    }
    for a in 0..m {
        for b in 0..a {
            cov[(a, b)] = cov[(b, a)];
        }
    }
    cov
}

/// Eigen-decomposition of a symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricEigen {
    /// Descending.
    pub values: Vec<f64>,
    /// Unit eigenvectors as columns, in the order of `values`.
    pub vectors: Matrix,
    pub sweeps: usize,
}

/// Cyclic Jacobi eigen-decomposition.
///
/// Rotations are applied until the off-diagonal Frobenius norm drops below
/// `1e-12 ||S||_F`.
///
/// ```
/// use snap::linalg::Matrix;
/// use snap::subspace::symmetric_eig;
///
/// let s = Matrix::from_rows(&[[2.0, 1.0], [1.0, 1.0]]).unwrap();
/// let eig = symmetric_eig(&s).unwrap();
/// let golden = 5f64.sqrt();
/// assert!((eig.values[0] - (3.0 + golden) / 2.0).abs() < 1e-12);
/// assert!((eig.values[1] - (3.0 - golden) / 2.0).abs() < 1e-12);
/// ```
pub fn symmetric_eig(s: &Matrix) -> Result<SymmetricEigen> {
    if !s.is_square() {
        return Err(Error::DimensionMismatch {
            expected: s.rows(),
            got: s.cols(),
        });
    }
    let n = s.rows();
    let scale = s.frobenius_norm();
    let asym = s.max_asymmetry();
    if asym > 1e-8 * scale.max(1.0) {
        return Err(Error::NotSymmetric(asym));
    }

    let mut a = s.clone();
    for i in 0..n {
        for j in 0..i {
            let avg = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = avg;
            a[(j, i)] = avg;
        }
    }
    let mut v = Matrix::identity(n);
    let target = 1e-12 * scale;
    let mut sweeps = 0;

    while sweeps < MAX_SWEEPS && off_diagonal_norm(&a) > target {
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                rotate(&mut a, &mut v, p, q, c, sn);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        for r in 0..n {
            vectors[(r, col)] = v[(r, src)];
        }
    }
    Ok(SymmetricEigen {
        values,
        vectors,
        sweeps,
    })
}

fn off_diagonal_norm(a: &Matrix) -> f64 {
    let n = a.rows();
    let mut ss = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                ss += a[(i, j)] * a[(i, j)];
            }
        }
    }
    ss.sqrt()
}

// A <- JᵀAJ and V <- VJ for the rotation J in the (p, q) plane.
fn rotate(a: &mut Matrix, v: &mut Matrix, p: usize, q: usize, c: f64, s: f64) {
    let n = a.rows();
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = c * akp - s * akq;
        a[(k, q)] = s * akp + c * akq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = c * apk - s * aqk;
        a[(q, k)] = s * apk + c * aqk;
    }
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}

/// A fitted `k`-dimensional principal subspace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubspaceEstimate {
    /// `m x k`, orthonormal columns.
    pub basis: Matrix,
    /// Top `k` eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
    pub center: Vec<f64>,
}

impl SubspaceEstimate {
    pub fn first_component(&self) -> Vec<f64> {
        self.basis.column(0)
    }

    /// `U Uᵀ`.
    pub fn projection(&self) -> Matrix {
        projector(&self.basis)
    }
}

fn projector(u: &Matrix) -> Matrix {
    u.matmul(&u.transpose()).expect("conformable")
}

/// PCA of the weighted covariance, keeping `k` components.
pub fn weighted_pca(points: &[Vec<f64>], w: &[f64], k: usize) -> Result<SubspaceEstimate> {
    let center = weighted_mean(points, w)?;
    let m = center.len();
    if k == 0 || k > m {
        return Err(Error::InvalidArgument(format!(
            "subspace dimension {k} outside 1..={m}"
        )));
    }
    let cov = covariance_about(points, w, &center);
    let eig = symmetric_eig(&cov)?;
    let mut basis = Matrix::zeros(m, k);
    for c in 0..k {
        for r in 0..m {
            basis[(r, c)] = eig.vectors[(r, c)];
        }
    }
    Ok(SubspaceEstimate {
        basis,
        eigenvalues: eig.values[..k].to_vec(),
        center,
    })
}

/// Ordinary PCA: uniform weights.
pub fn pca(points: &[Vec<f64>], k: usize) -> Result<SubspaceEstimate> {
    let n = points.len();
    weighted_pca(points, &vec![1.0 / n.max(1) as f64; n], k)
}

/// PCA with agreement weights from Euclidean pairwise distances.
pub fn snap_pca(points: &[Vec<f64>], k: usize, spec: KernelSpec) -> Result<SubspaceEstimate> {
    let w = snap_weights_for(points, spec, Metric::Euclidean)?;
    weighted_pca(points, &w, k)
}

/// Unsigned angle between two directions, in degrees within `[0, 90]`.
pub fn angle_error(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            got: v.len(),
        });
    }
    let (nu, nv) = (norm(u), norm(v));
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::ZeroVector);
    }
    // 2·atan2(|û - v̂|, |û + v̂|) stays accurate near 0°, unlike acos
    let sign = if dot(u, v) < 0.0 { -1.0 } else { 1.0 };
    let (mut diff, mut sum) = (0.0, 0.0);
    for (a, b) in u.iter().zip(v) {
        let (a, b) = (a / nu, sign * b / nv);
        diff += (a - b) * (a - b);
        sum += (a + b) * (a + b);
    }
    Ok((2.0 * diff.sqrt().atan2(sum.sqrt())).to_degrees())
}

/// `||U_a U_aᵀ - U_b U_bᵀ||_F`.
pub fn projection_error(u_a: &Matrix, u_b: &Matrix) -> Result<f64> {
    if u_a.rows() != u_b.rows() || u_a.cols() != u_b.cols() {
        return Err(Error::DimensionMismatch {
            expected: u_a.rows() * u_a.cols(),
            got: u_b.rows() * u_b.cols(),
        });
    }
    Ok(projector(u_a).sub(&projector(u_b))?.frobenius_norm())
}
