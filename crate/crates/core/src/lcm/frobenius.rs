//! Squared Frobenius distance between an LCM covariance and a target.
//!
//! Against samples, `||Sigma - Sigma_hat||_F^2` expands into a model term
//! `||d||^2 + 2 d.w^2 + (w^2)^T K(2a) (w^2)` minus a data term
//! `(2/N) sum_i (d.v_i^2 + (w*v_i)^T K(a) (w*v_i))`, plus the constant
//! `||Sigma_hat||_F^2`. Both kernel quadratic forms run on the prefix/suffix
//! machinery, so nothing here allocates a C×C buffer. The dense routines are
//! used when the target is itself a covariance matrix.

use nalgebra::DMatrix;

use crate::dense::{check_dense_dim, dense_alloc};
use crate::error::{check_len, LcmError, Result};
use crate::kernel_ops::{dense_kernel, Scratch, SortedView};
use crate::lcm::{softplus_grad, FeatureBatch, LcmParams};

/// Gradient of a Frobenius objective with respect to the raw parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct FrobeniusGrad {
    pub du: Vec<f64>,
    pub dw: Vec<f64>,
    pub da: Vec<f64>,
}

/// `diag(d) + diag(w) K(a) diag(w)` as a dense matrix.
pub fn materialize_covariance(p: &LcmParams) -> Result<DMatrix<f64>> {
    p.validate()?;
    let mut sigma = dense_kernel(&p.a)?;
    let d = p.d();
    let c = p.dim();
    for i in 0..c {
        for j in 0..c {
            sigma[(i, j)] *= p.w[i] * p.w[j];
        }
        sigma[(i, i)] += d[i];
    }
    Ok(sigma)
}

fn check_target(p: &LcmParams, target: &DMatrix<f64>) -> Result<()> {
    let c = p.dim();
    if target.nrows() != c || target.ncols() != c {
        return Err(LcmError::input(format!(
            "target is {}x{}, model dimension is {c}",
            target.nrows(),
            target.ncols()
        )));
    }
    check_dense_dim(c)?;
    for i in 0..c {
        for j in 0..i {
            let (x, y) = (target[(i, j)], target[(j, i)]);
            if !x.is_finite() || !y.is_finite() {
                return Err(LcmError::input(format!("target entry ({i},{j}) is not finite")));
            }
            if (x - y).abs() > 1e-9 * x.abs().max(y.abs()).max(1.0) {
                return Err(LcmError::input(format!(
                    "target is not symmetric at ({i},{j}): {x} vs {y}"
                )));
            }
        }
    }
    Ok(())
}

/// `||Sigma(p) - sigma_hat||_F^2` by direct elementwise evaluation.
pub fn frobenius_loss_dense(p: &LcmParams, sigma_hat: &DMatrix<f64>) -> Result<f64> {
    check_target(p, sigma_hat)?;
    let sigma = materialize_covariance(p)?;
    Ok(sigma
        .iter()
        .zip(sigma_hat.iter())
        .map(|(s, t)| (s - t) * (s - t))
        .sum())
}

/// Value and gradient of `||Sigma(p) - target||_F^2` for a dense target.
pub fn frobenius_value_and_grad_dense(
    p: &LcmParams,
    target: &DMatrix<f64>,
) -> Result<(f64, FrobeniusGrad)> {
    check_target(p, target)?;
    let c = p.dim();
    let d = p.d();
    let k = dense_kernel(&p.a)?;
    let mut resid = dense_alloc(c)?;
    let mut value = 0.0;
    for i in 0..c {
        for j in 0..c {
            let mut s = p.w[i] * p.w[j] * k[(i, j)];
            if i == j {
                s += d[i];
            }
            let r = s - target[(i, j)];
            resid[(i, j)] = r;
            value += r * r;
        }
    }
    // With G = 2 (Sigma - T):
    //   dL/dd_i = G_ii
    //   dL/dw_m = 2 sum_j G_mj w_j K_mj
    //   dL/da_m = -2 sum_j G_mj w_m w_j sign(a_m - a_j) K_mj
    let mut du = vec![0.0; c];
    let mut dw = vec![0.0; c];
    let mut da = vec![0.0; c];
    for m in 0..c {
        du[m] = 2.0 * resid[(m, m)] * softplus_grad(p.u[m]);
        let mut gw = 0.0;
        let mut ga = 0.0;
        for j in 0..c {
            let g = 2.0 * resid[(m, j)] * k[(m, j)] * p.w[j];
            gw += g;
            let diff = p.a[m] - p.a[j];
            if diff > 0.0 {
                ga -= g;
            } else if diff < 0.0 {
                ga += g;
            }
        }
        dw[m] = 2.0 * gw;
        da[m] = 2.0 * p.w[m] * ga;
    }
    Ok((value, FrobeniusGrad { du, dw, da }))
}

fn check_batch(p: &LcmParams, batch: &FeatureBatch) -> Result<()> {
    p.validate()?;
    check_len("batch columns", batch.n_cols(), p.dim())?;
    if !batch.is_centered() {
        return Err(LcmError::input(
            "Frobenius objective needs a centered batch (center it or call assume_centered)",
        ));
    }
    Ok(())
}

/// Decomposed objective: `||Sigma - Sigma_hat||_F^2 - ||Sigma_hat||_F^2`.
pub fn frobenius_loss_decomposed(p: &LcmParams, batch: &FeatureBatch) -> Result<f64> {
    check_batch(p, batch)?;
    let view = SortedView::new(&p.a)?;
    let view2 = view.scaled(2.0)?;
    let c = p.dim();
    let d = view.to_sorted(&p.d());
    let w = view.to_sorted(&p.w);
    let w2: Vec<f64> = w.iter().map(|x| x * x).collect();
    let mut scratch = Scratch::new(c);

    let model = d.iter().map(|x| x * x).sum::<f64>()
        + 2.0 * d.iter().zip(&w2).map(|(d, w2)| d * w2).sum::<f64>()
        + view2.quadform_sorted(&w2, &mut scratch);

    let mut y = vec![0.0; c];
    let mut data = 0.0;
    for row in batch.rows() {
        let mut diag_part = 0.0;
        for (k, &orig) in view.perm().iter().enumerate() {
            let v = row[orig];
            diag_part += d[k] * v * v;
            y[k] = w[k] * v;
        }
        data += diag_part + view.quadform_sorted(&y, &mut scratch);
    }
    Ok(model - 2.0 * data / batch.n_rows() as f64)
}

/// Value of [`frobenius_loss_decomposed`] together with its analytic gradient.
pub fn frobenius_value_and_grad(
    p: &LcmParams,
    batch: &FeatureBatch,
) -> Result<(f64, FrobeniusGrad)> {
    check_batch(p, batch)?;
    let view = SortedView::new(&p.a)?;
    let view2 = view.scaled(2.0)?;
    let c = p.dim();
    let n = batch.n_rows() as f64;
    let d = view.to_sorted(&p.d());
    let w = view.to_sorted(&p.w);
    let w2: Vec<f64> = w.iter().map(|x| x * x).collect();
    let mut scratch = Scratch::new(c);

    // Model term and its gradient.
    let mut k2w2 = vec![0.0; c];
    let mut ga2 = vec![0.0; c];
    view2.matvec_grad_sorted(&w2, &mut k2w2, &mut ga2, &mut scratch);
    let model_kernel: f64 = w2.iter().zip(&k2w2).map(|(a, b)| a * b).sum();
    let model = d.iter().map(|x| x * x).sum::<f64>()
        + 2.0 * d.iter().zip(&w2).map(|(d, w2)| d * w2).sum::<f64>()
        + model_kernel;

    let mut gd: Vec<f64> = (0..c).map(|k| 2.0 * d[k] + 2.0 * w2[k]).collect();
    let mut gw: Vec<f64> = (0..c)
        .map(|k| 4.0 * d[k] * w[k] + 4.0 * w[k] * k2w2[k])
        .collect();
    // Chain rule through the doubled coordinates.
    let mut ga: Vec<f64> = ga2.iter().map(|g| 2.0 * g).collect();

    // Data term, accumulated over samples in row order.
    let mut v = vec![0.0; c];
    let mut y = vec![0.0; c];
    let mut ky = vec![0.0; c];
    let mut gy = vec![0.0; c];
    let mut sum_v2 = vec![0.0; c];
    let mut sum_vky = vec![0.0; c];
    let mut sum_gy = vec![0.0; c];
    let mut data = 0.0;
    for row in batch.rows() {
        for (k, &orig) in view.perm().iter().enumerate() {
            v[k] = row[orig];
            y[k] = w[k] * v[k];
        }
        view.matvec_grad_sorted(&y, &mut ky, &mut gy, &mut scratch);
        for k in 0..c {
            let v2 = v[k] * v[k];
            data += d[k] * v2 + y[k] * ky[k];
            sum_v2[k] += v2;
            sum_vky[k] += v[k] * ky[k];
            sum_gy[k] += gy[k];
        }
    }
    let scale = 2.0 / n;
    for k in 0..c {
        gd[k] -= scale * sum_v2[k];
        gw[k] -= scale * 2.0 * sum_vky[k];
        ga[k] -= scale * sum_gy[k];
    }

    let u = view.to_sorted(&p.u);
    let du: Vec<f64> = (0..c).map(|k| gd[k] * softplus_grad(u[k])).collect();
    let grad = FrobeniusGrad {
        du: view.from_sorted(&du),
        dw: view.from_sorted(&gw),
        da: view.from_sorted(&ga),
    };
    Ok((model - scale * data, grad))
}

pub fn frobenius_grad(p: &LcmParams, batch: &FeatureBatch) -> Result<FrobeniusGrad> {
    frobenius_value_and_grad(p, batch).map(|(_, g)| g)
}

/// `||Sigma_hat||_F^2` for the biased empirical covariance of a centered batch.
///
/// Uses whichever of the C×C covariance or the N×N Gram matrix is smaller;
/// falls back to the Gram route when C exceeds the dense cap.
pub fn empirical_frobenius_sq(batch: &FeatureBatch) -> Result<f64> {
    let (n, c) = (batch.n_rows(), batch.n_cols());
    let nf = n as f64;
    if c <= n && check_dense_dim(c).is_ok() {
        let mut cov = dense_alloc(c)?;
        for row in batch.rows() {
            for i in 0..c {
                let ri = row[i];
                for j in 0..=i {
                    cov[(i, j)] += ri * row[j];
                }
            }
        }
        let mut total = 0.0;
        for i in 0..c {
            for j in 0..i {
                total += 2.0 * cov[(i, j)] * cov[(i, j)];
            }
            total += cov[(i, i)] * cov[(i, i)];
        }
        Ok(total / (nf * nf))
    } else {
        // sum_ij (v_i . v_j)^2 / N^2
        let mut total = 0.0;
        for i in 0..n {
            let ri = batch.row(i);
            for j in 0..i {
                let dot: f64 = ri.iter().zip(batch.row(j)).map(|(a, b)| a * b).sum();
                total += 2.0 * dot * dot;
            }
            let dot: f64 = ri.iter().map(|a| a * a).sum();
            total += dot * dot;
        }
        Ok(total / (nf * nf))
    }
}
