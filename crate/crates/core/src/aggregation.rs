//! Class-count-weighted running covariance across sequential tasks, and
//! re-fitting LCM parameters to the aggregate.

use nalgebra::DMatrix;

use crate::dense::check_dense_dim;
use crate::error::{LcmError, Result};
use crate::lcm::{fit, materialize_covariance, FeatureBatch, FitConfig, FitReport, FitTarget, LcmParams};
use crate::ssm::StateSpaceModel;

/// Number of classes seen so far and number introduced by the new task.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TaskWeights {
    n_old: u64,
    n_new: u64,
}

impl TaskWeights {
    pub fn new(n_old: u64, n_new: u64) -> Result<Self> {
        if n_old == 0 || n_new == 0 {
            return Err(LcmError::input(format!(
                "class counts must be at least 1, got n_old={n_old}, n_new={n_new}"
            )));
        }
        Ok(TaskWeights { n_old, n_new })
    }

    pub fn n_old(&self) -> u64 {
        self.n_old
    }

    pub fn n_new(&self) -> u64 {
        self.n_new
    }

    /// `(n_old, n_new) / (n_old + n_new)`.
    pub fn fractions(&self) -> (f64, f64) {
        let total = (self.n_old + self.n_new) as f64;
        (self.n_old as f64 / total, self.n_new as f64 / total)
    }
}

/// `sigma_old * n_old/(n_old+n_new) + sigma_new * n_new/(n_old+n_new)`.
pub fn aggregate_dense(
    sigma_old: &DMatrix<f64>,
    sigma_new: &DMatrix<f64>,
    weights: TaskWeights,
) -> Result<DMatrix<f64>> {
    if sigma_old.shape() != sigma_new.shape() || sigma_old.nrows() != sigma_old.ncols() {
        return Err(LcmError::input(format!(
            "cannot aggregate {:?} with {:?}",
            sigma_old.shape(),
            sigma_new.shape()
        )));
    }
    check_dense_dim(sigma_old.nrows())?;
    let (f_old, f_new) = weights.fractions();
    Ok(sigma_old * f_old + sigma_new * f_new)
}

/// Weight-convex combination of the two means.
pub fn aggregate_mean(mu_old: &[f64], mu_new: &[f64], weights: TaskWeights) -> Vec<f64> {
    let (f_old, f_new) = weights.fractions();
    mu_old
        .iter()
        .zip(mu_new)
        .map(|(a, b)| f_old * a + f_new * b)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggregationMode {
    /// Materialize both covariances and fit to their weighted average.
    Dense,
    /// Draw zero-mean samples from each stored model, `n_samples` in total
    /// split by the task weights, and fit to the pooled centered batch.
    Sampled { n_samples: usize, seed: u64 },
}

/// Re-fits LCM parameters to the aggregate of two stored models.
///
/// The fit starts from whichever model carries more classes (the old one on a
/// tie). The returned mean is the weighted combination of the two means.
pub fn aggregate_refit(
    p_old: &LcmParams,
    p_new: &LcmParams,
    weights: TaskWeights,
    config: &FitConfig,
    mode: AggregationMode,
) -> Result<FitReport> {
    p_old.validate()?;
    p_new.validate()?;
    if p_old.dim() != p_new.dim() {
        return Err(LcmError::input(format!(
            "model dimensions differ: {} vs {}",
            p_old.dim(),
            p_new.dim()
        )));
    }
    let mut init = if weights.n_new > weights.n_old {
        p_new.clone()
    } else {
        p_old.clone()
    };
    init.mu = vec![0.0; init.dim()];

    let mut report = match mode {
        AggregationMode::Dense => {
            check_dense_dim(p_old.dim())?;
            let target = aggregate_dense(
                &materialize_covariance(p_old)?,
                &materialize_covariance(p_new)?,
                weights,
            )?;
            fit(FitTarget::Dense(&target), config, Some(init))?
        }
        AggregationMode::Sampled { n_samples, seed } => {
            let pooled = pooled_samples(p_old, p_new, weights, n_samples, seed)?;
            fit(FitTarget::Batch(&pooled), config, Some(init))?
        }
    };
    report.params.mu = aggregate_mean(&p_old.mu, &p_new.mu, weights);
    Ok(report)
}

fn zero_mean(p: &LcmParams) -> LcmParams {
    LcmParams {
        mu: vec![0.0; p.dim()],
        ..p.clone()
    }
}

/// Centered pool of synthetic features whose covariance approaches the dense
/// aggregate. Each component is drawn around zero so that the spread between
/// the two means does not leak into the pooled covariance.
fn pooled_samples(
    p_old: &LcmParams,
    p_new: &LcmParams,
    weights: TaskWeights,
    n_samples: usize,
    seed: u64,
) -> Result<FeatureBatch> {
    if n_samples < 2 {
        return Err(LcmError::input(format!(
            "sampled aggregation needs at least 2 samples, got {n_samples}"
        )));
    }
    let (f_old, _) = weights.fractions();
    let n_old = ((n_samples as f64 * f_old).round() as usize).clamp(1, n_samples - 1);
    let n_new = n_samples - n_old;
    let old = StateSpaceModel::new(&zero_mean(p_old))?.sample(n_old, seed)?;
    let new = StateSpaceModel::new(&zero_mean(p_new))?.sample(n_new, seed ^ 0x9E37_79B9_7F4A_7C15)?;
    let (pooled, _) = FeatureBatch::vstack(&[&old, &new])?.centered();
    Ok(pooled)
}
