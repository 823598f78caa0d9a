use crate::error::{check_finite, check_len, LcmError, Result};

pub const DEFAULT_EPS: f64 = 1e-6;

/// `log(1 + exp(x))` without overflow.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Derivative of [`softplus`], the logistic function.
pub fn softplus_grad(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Inverse of [`softplus`] for `y > 0`.
pub fn softplus_inv(y: f64) -> f64 {
    // log(exp(y) - 1) = y + log(1 - exp(-y))
    y + (-(-y).exp_m1()).ln()
}

/// Parameters of `Sigma = diag(d) + diag(w) K(a) diag(w)` with
/// `d = softplus(u) + eps`, plus the feature mean `mu`.
#[derive(Debug, Clone, PartialEq)]
pub struct LcmParams {
    pub u: Vec<f64>,
    pub w: Vec<f64>,
    pub a: Vec<f64>,
    pub eps: f64,
    pub mu: Vec<f64>,
}

impl LcmParams {
    pub fn new(u: Vec<f64>, w: Vec<f64>, a: Vec<f64>, eps: f64, mu: Vec<f64>) -> Result<Self> {
        let p = LcmParams { u, w, a, eps, mu };
        p.validate()?;
        Ok(p)
    }

    /// Builds parameters from the diagonal `d` directly. Every `d_k` must exceed `eps`.
    pub fn from_diagonal(
        d: &[f64],
        w: Vec<f64>,
        a: Vec<f64>,
        eps: f64,
        mu: Vec<f64>,
    ) -> Result<Self> {
        if let Some((k, v)) = d.iter().enumerate().find(|(_, &v)| v.is_nan() || v <= eps) {
            return Err(LcmError::input(format!(
                "d[{k}] = {v} must exceed eps = {eps}"
            )));
        }
        let u = d.iter().map(|&v| softplus_inv(v - eps)).collect();
        Self::new(u, w, a, eps, mu)
    }

    /// Zero-mean parameters with `w = 0`, `a = 0`, `d = 1`.
    pub fn identity(dim: usize) -> Result<Self> {
        Self::from_diagonal(
            &vec![1.0; dim],
            vec![0.0; dim],
            vec![0.0; dim],
            DEFAULT_EPS,
            vec![0.0; dim],
        )
    }

    pub fn validate(&self) -> Result<()> {
        let c = self.u.len();
        if c == 0 {
            return Err(LcmError::input("model dimension must be at least 1"));
        }
        check_len("w", self.w.len(), c)?;
        check_len("a", self.a.len(), c)?;
        check_len("mu", self.mu.len(), c)?;
        check_finite("u", &self.u)?;
        check_finite("w", &self.w)?;
        check_finite("a", &self.a)?;
        check_finite("mu", &self.mu)?;
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(LcmError::input(format!(
                "eps must be positive and finite, got {}",
                self.eps
            )));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.u.len()
    }

    /// The diagonal noise `d = softplus(u) + eps`, strictly positive.
    pub fn d(&self) -> Vec<f64> {
        self.u.iter().map(|&u| softplus(u) + self.eps).collect()
    }

    /// `diag(Sigma) = d + w^2`.
    pub fn marginal_variances(&self) -> Vec<f64> {
        self.d()
            .iter()
            .zip(&self.w)
            .map(|(d, w)| d + w * w)
            .collect()
    }
}
