use std::f64::consts::PI;

use crate::error::{check_len, LcmError, Result};
use crate::lcm::{FeatureBatch, DEFAULT_EPS};

/// Independent per-channel Gaussian, the baseline the LCM is compared against.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalGaussian {
    pub mu: Vec<f64>,
    pub var: Vec<f64>,
}

impl DiagonalGaussian {
    /// Mean negative log-likelihood per sample, including the `log 2 pi` constant.
    pub fn nll(&self, batch: &FeatureBatch) -> Result<f64> {
        check_len("batch columns", batch.n_cols(), self.mu.len())?;
        let log_norm: f64 = self.var.iter().map(|v| (2.0 * PI * v).ln()).sum();
        let mut total = 0.0;
        for row in batch.rows() {
            let maha: f64 = row
                .iter()
                .zip(&self.mu)
                .zip(&self.var)
                .map(|((x, m), v)| (x - m) * (x - m) / v)
                .sum();
            total += log_norm + maha;
        }
        Ok(0.5 * total / batch.n_rows() as f64)
    }
}

/// Maximum-likelihood diagonal Gaussian: column means and biased variances,
/// floored at the default jitter.
pub fn diag_mle(batch: &FeatureBatch) -> Result<DiagonalGaussian> {
    if batch.n_rows() < 2 {
        return Err(LcmError::input(format!(
            "diagonal MLE needs at least 2 samples, got {}",
            batch.n_rows()
        )));
    }
    Ok(DiagonalGaussian {
        mu: batch.column_means(),
        var: batch
            .column_variances()
            .into_iter()
            .map(|v| v.max(DEFAULT_EPS))
            .collect(),
    })
}
