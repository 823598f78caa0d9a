//! Exact Gaussian likelihood of the full LCM covariance via a scalar Kalman filter.
//!
//! A draw from `N(mu, Sigma)` is `mu + w * z + eta` with `z ~ N(0, K(a))` and
//! `eta ~ N(0, diag(d))`. Walking the channels in sorted coordinate order, `z`
//! is an AR(1) chain, so the features form a 1D linear state-space model:
//!
//! ```text
//! z_k = phi_k z_{k-1} + e_k,        e_k ~ N(0, 1 - phi_k^2),  phi_k = exp(-gap_k)
//! x_k = mu_k + w_k z_k + eta_k,     eta_k ~ N(0, d_k)
//! ```
//!
//! The filter starts from the stationary prior `z_1 ~ N(0, 1)`. Its state
//! variances, innovation variances `S_k` and gains do not depend on the
//! observations, so they are computed once per parameter set; each sample then
//! costs one linear scan producing independent innovations `v_k ~ N(0, S_k)`.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{check_len, Result};
use crate::kernel_ops::SortedView;
use crate::lcm::{FeatureBatch, LcmParams};
use crate::precision::one_minus_rho_sq;

/// Observation-independent part of the Kalman recursion, in sorted channel order.
#[derive(Debug, Clone)]
pub struct StateSpaceModel {
    perm: Vec<usize>,
    phi: Vec<f64>,
    process_var: Vec<f64>,
    w: Vec<f64>,
    d: Vec<f64>,
    mu: Vec<f64>,
    s: Vec<f64>,
    gain: Vec<f64>,
}

impl StateSpaceModel {
    pub fn new(p: &LcmParams) -> Result<Self> {
        p.validate()?;
        let view = SortedView::new(&p.a)?;
        let c = p.dim();
        let w = view.to_sorted(&p.w);
        let d = view.to_sorted(&p.d());
        let mu = view.to_sorted(&p.mu);

        let mut phi = vec![0.0; c];
        let mut process_var = vec![1.0; c];
        for k in 1..c {
            phi[k] = view.rho()[k - 1];
            process_var[k] = one_minus_rho_sq(view.gaps()[k - 1]);
        }

        let mut s = vec![0.0; c];
        let mut gain = vec![0.0; c];
        let mut p_post = 0.0;
        for k in 0..c {
            let p_pred = phi[k] * phi[k] * p_post + process_var[k];
            s[k] = w[k] * w[k] * p_pred + d[k];
            gain[k] = p_pred * w[k] / s[k];
            // (1 - gain w) P_pred, written so it stays non-negative.
            p_post = p_pred * d[k] / s[k];
        }
        Ok(StateSpaceModel {
            perm: view.perm().to_vec(),
            phi,
            process_var,
            w,
            d,
            mu,
            s,
            gain,
        })
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    /// Innovation variances `S_k` in sorted order.
    pub fn innovation_variances(&self) -> &[f64] {
        &self.s
    }

    /// `log det Sigma = sum_k log S_k`.
    pub fn logdet(&self) -> f64 {
        self.s.iter().map(|s| s.ln()).sum()
    }

    /// Innovations of one sample (original channel order in, sorted order out).
    pub fn innovations_into(&self, x: &[f64], v: &mut [f64]) {
        let mut m_post = 0.0;
        for k in 0..self.dim() {
            let m_pred = self.phi[k] * m_post;
            let vk = x[self.perm[k]] - self.mu[k] - self.w[k] * m_pred;
            v[k] = vk;
            m_post = m_pred + self.gain[k] * vk;
        }
    }

    /// `(x - mu)^T Sigma^{-1} (x - mu) = sum_k v_k^2 / S_k`.
    pub fn mahalanobis(&self, x: &[f64]) -> Result<f64> {
        check_len("x", x.len(), self.dim())?;
        let mut m_post = 0.0;
        let mut total = 0.0;
        for k in 0..self.dim() {
            let m_pred = self.phi[k] * m_post;
            let vk = x[self.perm[k]] - self.mu[k] - self.w[k] * m_pred;
            total += vk * vk / self.s[k];
            m_post = m_pred + self.gain[k] * vk;
        }
        Ok(total)
    }

    /// Negative log-density of each row.
    pub fn per_sample_nll(&self, batch: &FeatureBatch) -> Result<Vec<f64>> {
        check_len("batch columns", batch.n_cols(), self.dim())?;
        let log_norm = self.logdet() + self.dim() as f64 * (2.0 * PI).ln();
        batch
            .rows()
            .map(|row| Ok(0.5 * (log_norm + self.mahalanobis(row)?)))
            .collect()
    }

    /// `1/(2N) sum_i sum_k (log(2 pi S_k) + v_ik^2 / S_k)`.
    pub fn nll(&self, batch: &FeatureBatch) -> Result<f64> {
        check_len("batch columns", batch.n_cols(), self.dim())?;
        let log_term: f64 = self.s.iter().map(|s| (2.0 * PI * s).ln()).sum();
        let mut maha = 0.0;
        for row in batch.rows() {
            maha += self.mahalanobis(row)?;
        }
        let n = batch.n_rows() as f64;
        Ok(0.5 * (log_term + maha / n))
    }

    /// Draws `n` samples. See [`sample`] for the stream layout.
    pub fn sample(&self, n: usize, seed: u64) -> Result<FeatureBatch> {
        let c = self.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut data = vec![0.0; n * c];
        let sd_process: Vec<f64> = self.process_var.iter().map(|q| q.sqrt()).collect();
        let sd_noise: Vec<f64> = self.d.iter().map(|d| d.sqrt()).collect();
        for row in data.chunks_exact_mut(c) {
            let mut z = 0.0;
            for k in 0..c {
                let e: f64 = StandardNormal.sample(&mut rng);
                let eta: f64 = StandardNormal.sample(&mut rng);
                z = self.phi[k] * z + sd_process[k] * e;
                row[self.perm[k]] = self.mu[k] + self.w[k] * z + sd_noise[k] * eta;
            }
        }
        FeatureBatch::new(data, n, c)
    }
}

/// Per-sample innovations and the shared innovation variances, sorted order.
#[derive(Debug, Clone, PartialEq)]
pub struct InnovationSequence {
    /// Row-major N×C innovations.
    pub v: Vec<f64>,
    pub s: Vec<f64>,
    pub perm: Vec<usize>,
    pub n_rows: usize,
}

impl InnovationSequence {
    pub fn row(&self, i: usize) -> &[f64] {
        let c = self.s.len();
        &self.v[i * c..(i + 1) * c]
    }
}

pub fn kalman_innovations(p: &LcmParams, batch: &FeatureBatch) -> Result<InnovationSequence> {
    let model = StateSpaceModel::new(p)?;
    check_len("batch columns", batch.n_cols(), model.dim())?;
    let c = model.dim();
    let mut v = vec![0.0; batch.n_rows() * c];
    for (row, out) in batch.rows().zip(v.chunks_exact_mut(c)) {
        model.innovations_into(row, out);
    }
    Ok(InnovationSequence {
        v,
        s: model.s.clone(),
        perm: model.perm.clone(),
        n_rows: batch.n_rows(),
    })
}

/// Mean negative log-likelihood of the batch under `N(mu, Sigma(p))`.
pub fn gaussian_nll(p: &LcmParams, batch: &FeatureBatch) -> Result<f64> {
    StateSpaceModel::new(p)?.nll(batch)
}

pub fn mahalanobis(p: &LcmParams, x: &[f64]) -> Result<f64> {
    StateSpaceModel::new(p)?.mahalanobis(x)
}

/// `log det Sigma(p)` as a by-product of the Kalman recursion.
pub fn lcm_logdet(p: &LcmParams) -> Result<f64> {
    Ok(StateSpaceModel::new(p)?.logdet())
}

/// Draws `n` samples from `N(mu, Sigma(p))` with a ChaCha8 stream seeded by `seed`.
///
/// Each sample consumes, for every channel in sorted order, one standard
/// normal for the latent chain followed by one for the observation noise.
/// Samples are drawn sequentially from a single stream, so the first `m` rows
/// are identical for any `n >= m`.
pub fn sample(p: &LcmParams, n: usize, seed: u64) -> Result<FeatureBatch> {
    StateSpaceModel::new(p)?.sample(n, seed)
}
