//! The LCM parameterization `Sigma = diag(d) + diag(w) K(a) diag(w)`, its
//! Frobenius fitting objective, the Adam fitting loop and the diagonal baseline.

mod adam;
mod batch;
mod diag;
mod fit;
mod frobenius;
mod params;
mod seriation;

pub use adam::Adam;
pub use batch::FeatureBatch;
pub use diag::{diag_mle, DiagonalGaussian};
pub use fit::{fit, fit_features, initial_params, FitConfig, FitReport, FitTarget};
pub use frobenius::{
    empirical_frobenius_sq, frobenius_grad, frobenius_loss_decomposed, frobenius_loss_dense,
    frobenius_value_and_grad, frobenius_value_and_grad_dense, materialize_covariance,
    FrobeniusGrad,
};
pub use params::{softplus, softplus_grad, softplus_inv, LcmParams, DEFAULT_EPS};
