//! Sparse inverse of the Laplace kernel.
//!
//! In sorted order a draw from `N(0, K)` is an AR(1) chain
//! `x_1 = e_1`, `x_i = rho_{i-1} x_{i-1} + e_i` with `Var(e_i) = 1 - rho_{i-1}^2`.
//! Writing it as `L x = e` with `L` unit lower bidiagonal gives
//! `K^{-1} = L^T D^{-1} L`, which is tridiagonal, and
//! `log det K = sum_k log(1 - rho_k^2)`.

use crate::error::{check_len, LcmError, Result};
use crate::kernel_ops::SortedView;

pub const DEFAULT_GAP_TOLERANCE: f64 = 1e-10;

/// Adjacent correlations of the sorted chain and the matching innovation variances.
#[derive(Debug, Clone, PartialEq)]
pub struct Ar1Chain {
    rho: Vec<f64>,
    innovation_var: Vec<f64>,
}

impl Ar1Chain {
    pub fn from_view(view: &SortedView) -> Self {
        let rho = view.rho().to_vec();
        let innovation_var = rho.iter().map(|r| 1.0 - r * r).collect();
        Ar1Chain {
            rho,
            innovation_var,
        }
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    /// `q_k = 1 - rho_k^2`.
    pub fn innovation_var(&self) -> &[f64] {
        &self.innovation_var
    }
}

/// `1 - exp(-2 gap)` evaluated without cancellation for small gaps.
pub(crate) fn one_minus_rho_sq(gap: f64) -> f64 {
    -(-2.0 * gap).exp_m1()
}

/// Main and off diagonals of `K(a)^{-1}` in sorted order.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalPrecision {
    pub main: Vec<f64>,
    pub off: Vec<f64>,
    pub perm: Vec<usize>,
}

impl TridiagonalPrecision {
    pub fn dim(&self) -> usize {
        self.main.len()
    }

    /// Entry `(i, j)` of the precision in sorted order.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        match i.abs_diff(j) {
            0 => self.main[i],
            1 => self.off[i.min(j)],
            _ => 0.0,
        }
    }
}

fn check_gaps(view: &SortedView, tolerance: f64) -> Result<()> {
    if let Some(k) = view.gaps().iter().position(|&g| g <= tolerance) {
        return Err(LcmError::Singular {
            left: view.perm()[k],
            right: view.perm()[k + 1],
            gap: view.gaps()[k],
            tolerance,
        });
    }
    Ok(())
}

pub fn kernel_precision_with_tolerance(a: &[f64], tolerance: f64) -> Result<TridiagonalPrecision> {
    let view = SortedView::new(a)?;
    check_gaps(&view, tolerance)?;
    let c = view.len();
    let rho = view.rho();
    let q: Vec<f64> = view.gaps().iter().map(|&g| one_minus_rho_sq(g)).collect();
    let mut main = vec![0.0; c];
    let mut off = vec![0.0; c.saturating_sub(1)];
    if c == 1 {
        main[0] = 1.0;
    } else {
        main[0] = 1.0 / q[0];
        for i in 1..c - 1 {
            main[i] = 1.0 / q[i - 1] + rho[i] * rho[i] / q[i];
        }
        main[c - 1] = 1.0 / q[c - 2];
        for i in 0..c - 1 {
            off[i] = -rho[i] / q[i];
        }
    }
    Ok(TridiagonalPrecision {
        main,
        off,
        perm: view.perm().to_vec(),
    })
}

/// Tridiagonal `K(a)^{-1}`; refuses coordinates closer than the default gap tolerance.
pub fn kernel_precision(a: &[f64]) -> Result<TridiagonalPrecision> {
    kernel_precision_with_tolerance(a, DEFAULT_GAP_TOLERANCE)
}

/// `log det K(a) = sum_k log(1 - rho_k^2)`, always `<= 0`.
pub fn kernel_logdet(a: &[f64]) -> Result<f64> {
    let view = SortedView::new(a)?;
    check_gaps(&view, DEFAULT_GAP_TOLERANCE)?;
    Ok(view.gaps().iter().map(|&g| one_minus_rho_sq(g).ln()).sum())
}

/// `x^T K(a)^{-1} x` via the bidiagonal factor: the sum of squared AR(1)
/// innovations over their variances, so the result is never negative.
pub fn kernel_precision_quadform(a: &[f64], x: &[f64]) -> Result<f64> {
    check_len("x", x.len(), a.len())?;
    let view = SortedView::new(a)?;
    check_gaps(&view, DEFAULT_GAP_TOLERANCE)?;
    let xs = view.to_sorted(x);
    let mut total = xs[0] * xs[0];
    for k in 1..xs.len() {
        let e = xs[k] - view.rho()[k - 1] * xs[k - 1];
        total += e * e / one_minus_rho_sq(view.gaps()[k - 1]);
    }
    Ok(total)
}
