#![allow(dead_code)]

use lcm_core::{FeatureBatch, LcmParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn normals(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| normal(rng)).collect()
}

/// Coordinates spread over roughly `[0, C/4]`, so neighbouring channels are
/// strongly but not perfectly correlated.
pub fn coords(rng: &mut ChaCha8Rng, c: usize) -> Vec<f64> {
    let span = (c as f64 / 4.0).max(1.0);
    (0..c).map(|_| rng.random_range(0.0..span)).collect()
}

pub fn min_gap(a: &[f64]) -> f64 {
    let mut s = a.to_vec();
    s.sort_by(f64::total_cmp);
    s.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
}

/// Coordinates whose sorted neighbours are at least `gap` apart.
pub fn separated_coords(rng: &mut ChaCha8Rng, c: usize, gap: f64) -> Vec<f64> {
    loop {
        let a = coords(rng, c);
        if min_gap(&a) > gap {
            return a;
        }
    }
}

/// Coordinates as consecutive positive gaps drawn from `[lo, hi)`, shuffled.
pub fn gapped_coords(rng: &mut ChaCha8Rng, c: usize, lo: f64, hi: f64) -> Vec<f64> {
    let mut a = Vec::with_capacity(c);
    let mut x = rng.random_range(-1.0..1.0);
    for _ in 0..c {
        a.push(x);
        x += rng.random_range(lo..hi);
    }
    for i in (1..c).rev() {
        let j = rng.random_range(0..=i);
        a.swap(i, j);
    }
    a
}

pub fn random_params(rng: &mut ChaCha8Rng, c: usize) -> LcmParams {
    let u = normals(rng, c);
    let w = normals(rng, c);
    let a = coords(rng, c);
    let mu = normals(rng, c);
    LcmParams::new(u, w, a, 1e-6, mu).unwrap()
}

pub fn random_batch(rng: &mut ChaCha8Rng, n: usize, c: usize) -> FeatureBatch {
    FeatureBatch::new(normals(rng, n * c), n, c).unwrap()
}

pub fn centered_batch(rng: &mut ChaCha8Rng, n: usize, c: usize) -> FeatureBatch {
    random_batch(rng, n, c).centered().0
}

pub fn rel_err(x: f64, y: f64) -> f64 {
    (x - y).abs() / y.abs().max(f64::MIN_POSITIVE)
}

pub fn max_rel_err(x: &[f64], y: &[f64]) -> f64 {
    let scale = y.iter().map(|v| v.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b).abs() / scale)
        .fold(0.0, f64::max)
}

/// Fourth-order central difference of `f` at `x[i]`.
pub fn central_diff(f: &dyn Fn(&[f64]) -> f64, x: &[f64], i: usize, h: f64) -> f64 {
    let at = |delta: f64| {
        let mut y = x.to_vec();
        y[i] += delta;
        f(&y)
    };
    (-at(2.0 * h) + 8.0 * at(h) - 8.0 * at(-h) + at(-2.0 * h)) / (12.0 * h)
}

pub fn frobenius_distance(a: &nalgebra::DMatrix<f64>, b: &nalgebra::DMatrix<f64>) -> f64 {
    (a - b).norm()
}
