//! Diagonal Gaussian against the LCM on synthetic correlated features.
//!
//! Output ends with one CSV line `structure,C,ll_diag,ll_lcm,delta`, where the
//! log-likelihoods are held-out means in nats per sample per dimension and
//! `delta = ll_lcm - ll_diag`.

use std::str::FromStr;

use lcm_core::ssm::sample;
use lcm_core::{diag_mle, fit_features, gaussian_nll, FeatureBatch, FitConfig, LcmParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Structure {
    /// Unit-variance AR(1) across the channel index.
    Ar1(f64),
    /// Samples from a random LCM.
    Planted,
}

impl FromStr for Structure {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "planted" {
            return Ok(Structure::Planted);
        }
        let rho = s
            .strip_prefix("ar1:")
            .ok_or_else(|| format!("expected ar1:<rho> or planted, got {s:?}"))?;
        let rho: f64 = rho.parse().map_err(|_| format!("invalid rho {rho:?}"))?;
        if !(rho > -1.0 && rho < 1.0) {
            return Err(format!("rho must lie in (-1, 1), got {rho}"));
        }
        Ok(Structure::Ar1(rho))
    }
}

impl std::fmt::Display for Structure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Structure::Ar1(rho) => write!(f, "ar1:{rho}"),
            Structure::Planted => f.write_str("planted"),
        }
    }
}

fn ar1_features(n: usize, c: usize, rho: f64, seed: u64) -> lcm_core::Result<FeatureBatch> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sd = (1.0 - rho * rho).sqrt();
    let mut data = Vec::with_capacity(n * c);
    for _ in 0..n {
        let mut z: f64 = StandardNormal.sample(&mut rng);
        data.push(z);
        for _ in 1..c {
            let e: f64 = StandardNormal.sample(&mut rng);
            z = rho * z + sd * e;
            data.push(z);
        }
    }
    FeatureBatch::new(data, n, c)
}

/// A random LCM with moderate noise and correlations that decay over a few
/// channels.
pub fn planted_params(c: usize, seed: u64) -> lcm_core::Result<LcmParams> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d: Vec<f64> = (0..c).map(|_| rng.random_range(0.2..1.0)).collect();
    let w = (0..c)
        .map(|_| {
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            sign * rng.random_range(0.5..1.5)
        })
        .collect();
    let span = (c as f64 / 4.0).max(1.0);
    let a = (0..c).map(|_| rng.random_range(0.0..span)).collect();
    LcmParams::from_diagonal(&d, w, a, lcm_core::lcm::DEFAULT_EPS, vec![0.0; c])
}

pub fn run(
    dims: usize,
    n_train: usize,
    n_test: usize,
    seed: u64,
    structure: Structure,
) -> Result<(), CliError> {
    if dims == 0 || n_train < 2 || n_test == 0 {
        return Err(CliError::Usage(
            "need --dims >= 1, --n-train >= 2 and --n-test >= 1".into(),
        ));
    }
    let n = n_train + n_test;
    let all = match structure {
        Structure::Ar1(rho) => ar1_features(n, dims, rho, seed)?,
        Structure::Planted => sample(&planted_params(dims, seed)?, n, seed)?,
    };
    // Rows are i.i.d., so the first n_train rows and the rest are disjoint splits.
    let train = all.slice_rows(0, n_train)?;
    let test = all.slice_rows(n_train, n)?;

    let config = FitConfig {
        seed,
        ..FitConfig::default()
    };
    let c = dims as f64;
    let ll_diag = -diag_mle(&train)?.nll(&test)? / c;
    let report = fit_features(&train, &config, None)?;
    let ll_lcm = -gaussian_nll(&report.params, &test)? / c;
    let delta = ll_lcm - ll_diag;

    println!("# structure {structure}, C={dims}, train {n_train} rows, test {n_test} rows, split seed {seed}");
    println!("# held-out mean log-likelihood, nats per dimension");
    println!("# diagonal {ll_diag:.6}  lcm {ll_lcm:.6}  delta {delta:+.6}");
    println!("structure,C,ll_diag,ll_lcm,delta");
    println!("{structure},{dims},{ll_diag:.9},{ll_lcm:.9},{delta:.9}");
    Ok(())
}
