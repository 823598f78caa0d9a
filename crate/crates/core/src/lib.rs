//! Laplace covariance model.
//!
//! A structured covariance `Sigma = diag(d) + diag(w) K(a) diag(w)` where
//! `K(a)_ij = exp(-|a_i - a_j|)` is a Laplace kernel over one scalar latent
//! coordinate per channel. It needs `O(C)` parameters and storage, and every
//! operation the fitting and scoring paths need runs in `O(C log C)` time:
//!
//! - [`kernel_ops`]: `K(a) x` and `x^T K(a) x` through prefix/suffix
//!   recursions over the sorted coordinates, plus coordinate gradients.
//! - [`precision`]: the tridiagonal inverse of `K(a)` and its log-determinant.
//! - [`ssm`]: exact Gaussian NLL, Mahalanobis distance, log-determinant and
//!   sampling for the full `Sigma` through a scalar Kalman filter.
//! - [`lcm`]: parameters, the Frobenius fitting objective and its gradient,
//!   Adam fitting and the diagonal-Gaussian baseline.
//! - [`aggregation`]: class-weighted running covariance across tasks.
//! - [`oracle`]: dense references used by the test suites.
//! - [`io`]: feature-matrix and model file formats.

pub mod aggregation;
pub mod dense;
pub mod error;
pub mod io;
pub mod kernel_ops;
pub mod lcm;
pub mod memory;
pub mod oracle;
pub mod precision;
pub mod ssm;

pub use aggregation::{aggregate_dense, aggregate_refit, AggregationMode, TaskWeights};
pub use error::{LcmError, Result};
pub use kernel_ops::{LatentCoordinates, SortedView};
pub use lcm::{
    diag_mle, fit, fit_features, DiagonalGaussian, FeatureBatch, FitConfig, FitReport, FitTarget,
    LcmParams,
};
pub use precision::{Ar1Chain, TridiagonalPrecision};
pub use ssm::{gaussian_nll, InnovationSequence, StateSpaceModel};
