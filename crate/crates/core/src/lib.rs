//! Agreement-based weighting for robust computation.
//!
//! Given `n` entities and a distance between them, every entity receives a
//! weight on the simplex that grows with how well it agrees with the rest of
//! the collection. Dispersed outliers end up with weights that are
//! negligible, so plugging the weights into an ordinary weighted estimator
//! (a mean, a geometric median, a covariance) makes that estimator robust
//! without any tuning.
//!
//! ```
//! use snap::metrics::{pairwise_matrix, Dataset, Metric};
//! use snap::weights::{agreement_weights, KernelSpec};
//!
//! let data = Dataset::vectors(vec![
//!     vec![0.0, 0.1],
//!     vec![0.1, 0.0],
//!     vec![-0.1, 0.0],
//!     vec![0.0, -0.1],
//!     vec![9.0, 9.0],
//! ])
//! .unwrap();
//! let dist = pairwise_matrix(&data, Metric::Euclidean).unwrap();
//! let w = agreement_weights(&dist, KernelSpec::GAUSS_MAD);
//! assert!(w[4] < 1e-6);
//! ```
//!
//! Modules:
//!
//! - [`metrics`]: distances and pairwise matrices for vectors, scalars and rankings
//! - [`weights`]: disagreement scores, kernel scales, weights and their Jacobian
//! - [`aggregation`]: weighted mean and Weiszfeld, plus the usual baselines
//! - [`subspace`]: weighted PCA on a Jacobi eigensolver
//! - [`timeseries`]: EMA and the agreement-weighted moving average
//! - [`datagen`]: seeded synthetic benchmarks

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aggregation;
pub mod datagen;
mod error;
pub mod linalg;
pub mod metrics;
pub mod stats;
pub mod subspace;
pub mod timeseries;
pub mod weights;

pub use error::{Error, Result};
pub use metrics::{DistanceMatrix, Metric};
pub use weights::{KernelFamily, KernelSpec, ScaleRule, WeightVector};

// The guide in book/ is compiled here so its snippets run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/distances.md")]
    mod distances {}
    #[doc = include_str!("../../../book/src/weights.md")]
    mod weights {}
    #[doc = include_str!("../../../book/src/properties.md")]
    mod properties {}
    #[doc = include_str!("../../../book/src/aggregation.md")]
    mod aggregation {}
    #[doc = include_str!("../../../book/src/pca.md")]
    mod pca {}
    #[doc = include_str!("../../../book/src/smoothing.md")]
    mod smoothing {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
