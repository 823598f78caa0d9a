//! Spectral channel ordering used to place the initial latent coordinates.
//!
//! For `Sigma = diag(d) + diag(w) K(a) diag(w)` the leading eigenvector of the
//! correlation matrix carries the signs of `w` and the second one varies
//! monotonically along the coordinate axis. Their ratio is a sign-free key
//! whose order approximates the order of `a`.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dense::dense_alloc;
use crate::error::Result;
use crate::lcm::fit::FitTarget;

/// Dimensions up to this use a dense eigendecomposition of the correlation.
const DENSE_EIGEN_MAX: usize = 256;
const BLOCK: usize = 8;
const ITERATIONS: usize = 60;

pub(crate) struct Seriation {
    /// Ordering key per channel (ascending key = ascending coordinate).
    pub key: Vec<f64>,
    /// Sign of each channel's entry in the leading eigenvector.
    pub sign: Vec<f64>,
}

fn inv_sd(var: &[f64]) -> Vec<f64> {
    var.iter()
        .map(|&v| if v > 0.0 { 1.0 / v.sqrt() } else { 0.0 })
        .collect()
}

pub(crate) fn seriate(target: FitTarget<'_>, var: &[f64], seed: u64) -> Result<Seriation> {
    let c = var.len();
    if c < 3 {
        return Ok(Seriation {
            key: (0..c).map(|i| i as f64).collect(),
            sign: vec![1.0; c],
        });
    }
    let scale = inv_sd(var);
    let (e1, e2) = if c <= DENSE_EIGEN_MAX {
        let mut corr = dense_alloc(c)?;
        match target {
            FitTarget::Dense(m) => {
                for i in 0..c {
                    for j in 0..c {
                        corr[(i, j)] = m[(i, j)] * scale[i] * scale[j];
                    }
                }
            }
            FitTarget::Batch(b) => {
                for row in b.rows() {
                    for i in 0..c {
                        let ri = row[i] * scale[i];
                        for j in 0..=i {
                            corr[(i, j)] += ri * row[j] * scale[j];
                        }
                    }
                }
                let n = b.n_rows() as f64;
                for i in 0..c {
                    for j in 0..=i {
                        let v = corr[(i, j)] / n;
                        corr[(i, j)] = v;
                        corr[(j, i)] = v;
                    }
                }
            }
        }
        top_two_dense(corr)
    } else {
        top_two_subspace(target, &scale, seed)
    };
    let key = e1
        .iter()
        .zip(&e2)
        .map(|(a, b)| {
            let denom = if a.abs() < 1e-300 { 1e-300 } else { *a };
            b / denom
        })
        .collect();
    let sign = e1.iter().map(|v| if *v < 0.0 { -1.0 } else { 1.0 }).collect();
    Ok(Seriation { key, sign })
}

fn top_two_dense(corr: DMatrix<f64>) -> (Vec<f64>, Vec<f64>) {
    let eig = SymmetricEigen::new(corr);
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let col = |k: usize| eig.eigenvectors.column(idx[k]).iter().copied().collect();
    (col(0), col(1))
}

/// Correlation-times-block product without forming the C×C correlation.
fn apply(target: FitTarget<'_>, scale: &[f64], q: &DMatrix<f64>) -> DMatrix<f64> {
    let (c, b) = q.shape();
    let mut out = DMatrix::zeros(c, b);
    match target {
        FitTarget::Dense(m) => {
            for k in 0..b {
                for i in 0..c {
                    let mut acc = 0.0;
                    for j in 0..c {
                        acc += m[(i, j)] * scale[j] * q[(j, k)];
                    }
                    out[(i, k)] = acc * scale[i];
                }
            }
        }
        FitTarget::Batch(batch) => {
            let n = batch.n_rows() as f64;
            let mut proj = vec![0.0; b];
            for row in batch.rows() {
                for (k, p) in proj.iter_mut().enumerate() {
                    *p = (0..c).map(|j| row[j] * scale[j] * q[(j, k)]).sum();
                }
                for i in 0..c {
                    let ri = row[i] * scale[i];
                    for k in 0..b {
                        out[(i, k)] += ri * proj[k];
                    }
                }
            }
            out /= n;
        }
    }
    out
}

fn top_two_subspace(target: FitTarget<'_>, scale: &[f64], seed: u64) -> (Vec<f64>, Vec<f64>) {
    let c = scale.len();
    let b = BLOCK.min(c);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x05EE_D0F5_E41A_7E00);
    let mut q = DMatrix::from_fn(c, b, |_, _| StandardNormal.sample(&mut rng));
    q = q.qr().q();
    for _ in 0..ITERATIONS {
        q = apply(target, scale, &q).qr().q();
    }
    // Rayleigh-Ritz on the converged block.
    let rq = apply(target, scale, &q);
    let small = q.transpose() * rq;
    let small = (&small + small.transpose()) * 0.5;
    let eig = SymmetricEigen::new(small);
    let mut idx: Vec<usize> = (0..b).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let ritz = |k: usize| -> Vec<f64> { (&q * eig.eigenvectors.column(idx[k])).iter().copied().collect() };
    (ritz(0), ritz(1))
}
