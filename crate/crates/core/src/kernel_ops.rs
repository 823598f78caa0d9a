//! Algebra on the Laplace kernel `K(a)_ij = exp(-|a_i - a_j|)`.
//!
//! Once the coordinates are sorted, `K` factors along the chain: the entry
//! between sorted positions `i < j` is the product of the adjacent decay
//! factors `rho_i ... rho_{j-1}`. A matrix-vector product therefore splits into
//! a left-to-right prefix recursion and a right-to-left suffix recursion, each
//! linear in `C`. The only super-linear step is the sort, which [`SortedView`]
//! performs once and caches.

use nalgebra::DMatrix;

use crate::dense::dense_alloc;
use crate::error::{check_finite, check_len, LcmError, Result};

/// Scalar latent coordinate per channel. Non-empty and finite.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentCoordinates(Vec<f64>);

impl LatentCoordinates {
    pub fn new(a: Vec<f64>) -> Result<Self> {
        if a.is_empty() {
            return Err(LcmError::input("latent coordinates must be non-empty"));
        }
        check_finite("a", &a)?;
        Ok(LatentCoordinates(a))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for LatentCoordinates {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Coordinates in ascending order together with the permutation that produced
/// them, the adjacent gaps and the decay factors `rho_k = exp(-gap_k)`.
///
/// `perm[k]` is the original index of the `k`-th smallest coordinate; ties
/// keep their original relative order.
#[derive(Debug, Clone, PartialEq)]
pub struct SortedView {
    perm: Vec<usize>,
    sorted_a: Vec<f64>,
    gaps: Vec<f64>,
    rho: Vec<f64>,
}

impl SortedView {
    pub fn new(a: &[f64]) -> Result<Self> {
        if a.is_empty() {
            return Err(LcmError::input("latent coordinates must be non-empty"));
        }
        check_finite("a", a)?;
        let mut perm: Vec<usize> = (0..a.len()).collect();
        // Stable sort: ties stay in index order.
        perm.sort_by(|&i, &j| a[i].total_cmp(&a[j]));
        let sorted_a: Vec<f64> = perm.iter().map(|&i| a[i]).collect();
        let gaps: Vec<f64> = sorted_a.windows(2).map(|w| w[1] - w[0]).collect();
        let rho = gaps.iter().map(|g| (-g).exp()).collect();
        Ok(SortedView {
            perm,
            sorted_a,
            gaps,
            rho,
        })
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn sorted_a(&self) -> &[f64] {
        &self.sorted_a
    }

    pub fn gaps(&self) -> &[f64] {
        &self.gaps
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    /// View of the coordinates `factor * a` for `factor > 0`.
    ///
    /// The permutation is reused; only gaps and decay factors are rescaled, so
    /// `K(2a)` costs no second sort.
    pub fn scaled(&self, factor: f64) -> Result<SortedView> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(LcmError::input(format!(
                "scale factor must be positive and finite, got {factor}"
            )));
        }
        let gaps: Vec<f64> = self.gaps.iter().map(|g| g * factor).collect();
        Ok(SortedView {
            perm: self.perm.clone(),
            sorted_a: self.sorted_a.iter().map(|a| a * factor).collect(),
            rho: gaps.iter().map(|g| (-g).exp()).collect(),
            gaps,
        })
    }

    /// Gathers `x` into sorted channel order.
    pub fn to_sorted(&self, x: &[f64]) -> Vec<f64> {
        self.perm.iter().map(|&i| x[i]).collect()
    }

    /// Scatters a sorted-order vector back to original channel order.
    pub fn from_sorted(&self, xs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; xs.len()];
        for (k, &i) in self.perm.iter().enumerate() {
            out[i] = xs[k];
        }
        out
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        check_len("x", x.len(), self.len())
    }

    /// `K(a) x` without materializing `K`.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let xs = self.to_sorted(x);
        let mut scratch = Scratch::new(self.len());
        let mut ys = vec![0.0; self.len()];
        self.matvec_sorted(&xs, &mut ys, &mut scratch);
        Ok(self.from_sorted(&ys))
    }

    /// `x^T K(a) x`.
    pub fn quadform(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        let xs = self.to_sorted(x);
        let mut scratch = Scratch::new(self.len());
        Ok(self.quadform_sorted(&xs, &mut scratch))
    }

    /// Gradient of `x^T K(a) x` with respect to `a`, in original channel order.
    ///
    /// Uses `sign(0) = 0`: channels with exactly equal coordinates exert no
    /// force on each other.
    pub fn quadform_grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let xs = self.to_sorted(x);
        let mut scratch = Scratch::new(self.len());
        let mut ky = vec![0.0; self.len()];
        let mut grad = vec![0.0; self.len()];
        self.matvec_grad_sorted(&xs, &mut ky, &mut grad, &mut scratch);
        Ok(self.from_sorted(&grad))
    }

    /// Prefix sums `L` and suffix sums `R` of `xs` (sorted order) into `scratch`.
    pub(crate) fn prefix_suffix(&self, xs: &[f64], scratch: &mut Scratch) {
        let n = xs.len();
        let (left, right) = (&mut scratch.left, &mut scratch.right);
        left[0] = 0.0;
        for i in 1..n {
            left[i] = self.rho[i - 1] * (left[i - 1] + xs[i - 1]);
        }
        right[n - 1] = 0.0;
        for i in (0..n - 1).rev() {
            right[i] = self.rho[i] * (right[i + 1] + xs[i + 1]);
        }
    }

    pub(crate) fn matvec_sorted(&self, xs: &[f64], out: &mut [f64], scratch: &mut Scratch) {
        self.prefix_suffix(xs, scratch);
        for i in 0..xs.len() {
            out[i] = scratch.left[i] + xs[i] + scratch.right[i];
        }
    }

    pub(crate) fn quadform_sorted(&self, xs: &[f64], scratch: &mut Scratch) -> f64 {
        self.prefix_suffix(xs, scratch);
        xs.iter()
            .enumerate()
            .map(|(i, &x)| x * (scratch.left[i] + x + scratch.right[i]))
            .sum()
    }

    /// Writes `K xs` into `ky` and `d(xs^T K xs)/d(sorted a)` into `grad`.
    ///
    /// `d/da_m = -2 x_m (sum_{a_j < a_m} K_mj x_j - sum_{a_j > a_m} K_mj x_j)`.
    /// Inside a run of tied coordinates the plain prefix recursion would count
    /// the tied neighbours, so the strict sums are read off at the run's ends.
    pub(crate) fn matvec_grad_sorted(
        &self,
        xs: &[f64],
        ky: &mut [f64],
        grad: &mut [f64],
        scratch: &mut Scratch,
    ) {
        self.matvec_sorted(xs, ky, scratch);
        let n = xs.len();
        let mut start = 0;
        while start < n {
            let mut end = start + 1;
            while end < n && self.gaps[end - 1] == 0.0 {
                end += 1;
            }
            let strict_left = scratch.left[start];
            let strict_right = scratch.right[end - 1];
            for m in start..end {
                grad[m] = -2.0 * xs[m] * (strict_left - strict_right);
            }
            start = end;
        }
    }
}

/// Reusable buffers for the prefix/suffix passes.
#[derive(Debug, Clone)]
pub(crate) struct Scratch {
    pub(crate) left: Vec<f64>,
    pub(crate) right: Vec<f64>,
}

impl Scratch {
    pub(crate) fn new(n: usize) -> Self {
        Scratch {
            left: vec![0.0; n],
            right: vec![0.0; n],
        }
    }
}

pub fn sorted_view(a: &[f64]) -> Result<SortedView> {
    SortedView::new(a)
}

/// Dense `K(a)`. Oracle and debugging path only; subject to the dense cap.
pub fn dense_kernel(a: &[f64]) -> Result<DMatrix<f64>> {
    if a.is_empty() {
        return Err(LcmError::input("latent coordinates must be non-empty"));
    }
    check_finite("a", a)?;
    let c = a.len();
    let mut k = dense_alloc(c)?;
    for i in 0..c {
        k[(i, i)] = 1.0;
        for j in 0..i {
            let v = (-(a[i] - a[j]).abs()).exp();
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    Ok(k)
}

pub fn kernel_matvec(a: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    check_len("x", x.len(), a.len())?;
    SortedView::new(a)?.matvec(x)
}

pub fn kernel_quadform(a: &[f64], x: &[f64]) -> Result<f64> {
    check_len("x", x.len(), a.len())?;
    SortedView::new(a)?.quadform(x)
}

pub fn kernel_quadform_grad_a(a: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    check_len("x", x.len(), a.len())?;
    SortedView::new(a)?.quadform_grad(x)
}
