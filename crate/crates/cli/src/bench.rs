//! Wall-time sweep of the two per-evaluation hot paths.

use std::hint::black_box;
use std::time::{Duration, Instant};

use lcm_core::dense::dense_allocations;
use lcm_core::lcm::frobenius_loss_decomposed;
use lcm_core::{FeatureBatch, LcmParams, StateSpaceModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::CliError;

const MIN_SAMPLE: Duration = Duration::from_millis(40);
const SAMPLES: usize = 7;

/// Median seconds per call, each sample repeating `f` for at least `MIN_SAMPLE`.
fn time_per_call(mut f: impl FnMut()) -> f64 {
    f();
    let mut reps = 1usize;
    loop {
        let start = Instant::now();
        for _ in 0..reps {
            f();
        }
        if start.elapsed() >= MIN_SAMPLE {
            break;
        }
        reps *= 2;
    }
    let mut per_call: Vec<f64> = (0..SAMPLES)
        .map(|_| {
            let start = Instant::now();
            for _ in 0..reps {
                f();
            }
            start.elapsed().as_secs_f64() / reps as f64
        })
        .collect();
    per_call.sort_by(f64::total_cmp);
    per_call[SAMPLES / 2]
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

pub fn run(dims: &[usize], n: usize, seed: u64) -> Result<(), CliError> {
    if dims.is_empty() || dims.contains(&0) || n == 0 {
        return Err(CliError::Usage("--dims and --n must be positive".into()));
    }
    if dims.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::Usage("--dims must be strictly ascending".into()));
    }
    let allocations_before = dense_allocations();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut frob = Vec::with_capacity(dims.len());
    let mut kalman = Vec::with_capacity(dims.len());

    println!("dim,frobenius_s,kalman_nll_s");
    for &c in dims {
        let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
        let u: Vec<f64> = (0..c).map(|_| normal()).collect();
        let w: Vec<f64> = (0..c).map(|_| normal()).collect();
        let data: Vec<f64> = (0..n * c).map(|_| normal()).collect();
        let a: Vec<f64> = (0..c).map(|_| rng.random_range(0.0..c as f64 / 8.0)).collect();
        let params = LcmParams::new(u, w, a, lcm_core::lcm::DEFAULT_EPS, vec![0.0; c])?;
        let raw = FeatureBatch::new(data, n, c)?;
        let centered = raw.centered().0;

        let t_frob = time_per_call(|| {
            black_box(frobenius_loss_decomposed(&params, &centered).unwrap());
        });
        let t_kalman = time_per_call(|| {
            let ssm = StateSpaceModel::new(&params).unwrap();
            black_box(ssm.nll(&raw).unwrap());
        });
        println!("{c},{t_frob:.6e},{t_kalman:.6e}");
        frob.push(t_frob);
        kalman.push(t_kalman);
    }

    let dense = dense_allocations() - allocations_before;
    if dims.len() >= 2 {
        let x: Vec<f64> = dims.iter().map(|&d| d as f64).collect();
        println!("exponent_frobenius {:.3}", loglog_slope(&x, &frob));
        println!("exponent_kalman_nll {:.3}", loglog_slope(&x, &kalman));
    } else {
        println!("exponent_frobenius n/a");
        println!("exponent_kalman_nll n/a");
    }
    println!("dense_allocations {dense}");
    if dense != 0 {
        return Err(CliError::Runtime(format!(
            "{dense} dense C x C buffers were allocated during the sweep"
        )));
    }
    Ok(())
}
