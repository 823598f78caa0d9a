//! Seeded fixtures shared by the benchmarks in `benches/`.

use lcm_core::lcm::DEFAULT_EPS;
use lcm_core::{FeatureBatch, LcmParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Random parameters of dimension `c` (coordinates on `[0, c/8]`) and an
/// `n x c` standard-normal batch, centered.
pub fn fixture(c: usize, n: usize, seed: u64) -> (LcmParams, FeatureBatch) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normals = |k: usize| -> Vec<f64> {
        (0..k).map(|_| StandardNormal.sample(&mut rng)).collect()
    };
    let u = normals(c);
    let w = normals(c);
    let data = normals(n * c);
    let a = (0..c).map(|_| rng.random_range(0.0..c as f64 / 8.0)).collect();
    let params = LcmParams::new(u, w, a, DEFAULT_EPS, vec![0.0; c]).expect("finite fixture");
    let batch = FeatureBatch::new(data, n, c).expect("finite fixture").centered().0;
    (params, batch)
}
