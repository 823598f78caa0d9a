//! Guard for every code path that allocates a C×C buffer.
//!
//! Dense matrices exist only for oracles, small-scale debugging and dense
//! fitting targets. Each such allocation goes through [`dense_alloc`], which
//! refuses dimensions above the cap and bumps a process-wide counter so that
//! callers (the scaling benchmark in particular) can assert that a sweep never
//! touched quadratic memory.

use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};

use nalgebra::DMatrix;

use crate::error::{LcmError, Result};

pub const DEFAULT_DENSE_CAP: usize = 4096;

static DENSE_CAP: AtomicUsize = AtomicUsize::new(DEFAULT_DENSE_CAP);
static DENSE_ALLOCATIONS: AtomicU64 = AtomicU64::new(0);

pub fn dense_cap() -> usize {
    DENSE_CAP.load(Ordering::Relaxed)
}

pub fn set_dense_cap(cap: usize) {
    DENSE_CAP.store(cap, Ordering::Relaxed);
}

/// Number of C×C buffers allocated through the guard since process start.
pub fn dense_allocations() -> u64 {
    DENSE_ALLOCATIONS.load(Ordering::Relaxed)
}

pub fn check_dense_dim(dim: usize) -> Result<()> {
    let cap = dense_cap();
    if dim > cap {
        return Err(LcmError::Size { dim, cap });
    }
    Ok(())
}

/// Allocates a zeroed `dim`×`dim` matrix, or fails with a size error.
pub fn dense_alloc(dim: usize) -> Result<DMatrix<f64>> {
    check_dense_dim(dim)?;
    DENSE_ALLOCATIONS.fetch_add(1, Ordering::Relaxed);
    Ok(DMatrix::zeros(dim, dim))
}
