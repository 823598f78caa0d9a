//! Dense brute-force references. Quadratic memory, cubic time; used to check
//! every fast path and never called on the production path.

use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::dense::{check_dense_dim, dense_alloc};
use crate::error::{check_len, LcmError, Result};
use crate::lcm::{materialize_covariance, FeatureBatch, LcmParams};

fn check_square(m: &DMatrix<f64>) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(LcmError::input(format!(
            "matrix is {}x{}, expected square",
            m.nrows(),
            m.ncols()
        )));
    }
    check_dense_dim(m.nrows())?;
    Ok(m.nrows())
}

fn cholesky(m: &DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    check_square(m)?;
    Cholesky::new(m.clone())
        .ok_or_else(|| LcmError::Numerical("Cholesky factorization failed".into()))
}

/// Plain `O(C^2)` product.
pub fn dense_matvec(k: &DMatrix<f64>, x: &[f64]) -> Result<Vec<f64>> {
    let c = check_square(k)?;
    check_len("x", x.len(), c)?;
    Ok((0..c)
        .map(|i| (0..c).map(|j| k[(i, j)] * x[j]).sum())
        .collect())
}

/// `log det M` from the diagonal of the Cholesky factor.
pub fn dense_logdet(m: &DMatrix<f64>) -> Result<f64> {
    let chol = cholesky(m)?;
    Ok(2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>())
}

/// `x^T M^{-1} x` via forward and backward triangular solves.
pub fn dense_solve_quadform(m: &DMatrix<f64>, x: &[f64]) -> Result<f64> {
    let chol = cholesky(m)?;
    check_len("x", x.len(), m.nrows())?;
    let xv = DVector::from_column_slice(x);
    let solved = chol.solve(&xv);
    Ok(xv.dot(&solved))
}

/// `M^{-1}` from the Cholesky factor.
pub fn dense_inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Ok(cholesky(m)?.inverse())
}

/// Mean Gaussian NLL with the dense covariance, including `(C/2) log 2 pi`.
pub fn dense_nll(p: &LcmParams, batch: &FeatureBatch) -> Result<f64> {
    check_len("batch columns", batch.n_cols(), p.dim())?;
    let sigma = materialize_covariance(p)?;
    let chol = cholesky(&sigma)?;
    let logdet = 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let c = p.dim();
    let mut maha = 0.0;
    for row in batch.rows() {
        let diff = DVector::from_iterator(c, row.iter().zip(&p.mu).map(|(x, m)| x - m));
        maha += diff.dot(&chol.solve(&diff));
    }
    let n = batch.n_rows() as f64;
    Ok(0.5 * (logdet + maha / n + c as f64 * (2.0 * PI).ln()))
}

/// Biased `(1/N) sum_i v_i v_i^T` of a centered batch.
pub fn empirical_cov(batch: &FeatureBatch) -> Result<DMatrix<f64>> {
    if !batch.is_centered() {
        return Err(LcmError::input("empirical covariance needs a centered batch"));
    }
    let c = batch.n_cols();
    let mut cov = dense_alloc(c)?;
    for row in batch.rows() {
        for i in 0..c {
            for j in 0..c {
                cov[(i, j)] += row[i] * row[j];
            }
        }
    }
    Ok(cov / batch.n_rows() as f64)
}
