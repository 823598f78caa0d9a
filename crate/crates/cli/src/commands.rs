use std::path::Path;
use std::time::Instant;

use lcm_core::io::{read_features, read_model, write_feature_matrix, write_model};
use lcm_core::memory::memory_report;
use lcm_core::{
    aggregate_refit, fit_features, AggregationMode, FitConfig, FitTarget, StateSpaceModel,
    TaskWeights,
};

use crate::CliError;

/// `x` with `digits` significant digits, fixed-point where that stays short.
pub fn significant(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    if (-5..15).contains(&magnitude) {
        let decimals = (digits as i32 - 1 - magnitude).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{:.*e}", digits - 1, x)
    }
}

pub fn fit(
    input: &Path,
    out: &Path,
    lr: f64,
    epochs: usize,
    seed: u64,
    center: bool,
) -> Result<(), CliError> {
    let config = FitConfig {
        learning_rate: lr,
        epochs,
        seed,
        ..FitConfig::default()
    };
    config.validate()?;
    let batch = read_features(input)?;
    if batch.n_rows() < 2 {
        return Err(CliError::Usage(format!(
            "{}: fitting needs at least 2 samples, got {}",
            input.display(),
            batch.n_rows()
        )));
    }
    let start = Instant::now();
    let report = if center {
        fit_features(&batch, &config, None)?
    } else {
        let batch = batch.assume_centered().map_err(|e| {
            CliError::Usage(format!("{e} (pass --center to subtract column means)"))
        })?;
        lcm_core::fit(FitTarget::Batch(&batch), &config, None)?
    };
    let elapsed = start.elapsed().as_secs_f64();
    write_model(&report.params, out)?;
    if epochs == 0 {
        println!("loss {}", significant(report.initial_loss, 12));
    } else {
        println!("initial_loss {}", significant(report.initial_loss, 12));
        println!("final_loss {}", significant(report.final_loss, 12));
        println!("best_epoch {}", report.best_epoch);
    }
    println!("wall_time_s {elapsed:.3}");
    Ok(())
}

pub fn nll(model: &Path, input: &Path, per_sample: bool) -> Result<(), CliError> {
    let params = read_model(model)?;
    let batch = read_features(input)?;
    if params.dim() != batch.n_cols() {
        return Err(CliError::Usage(format!(
            "model dimension {} does not match input dimension {}",
            params.dim(),
            batch.n_cols()
        )));
    }
    let ssm = StateSpaceModel::new(&params)?;
    if per_sample {
        let values = ssm.per_sample_nll(&batch)?;
        println!("{}", significant(ssm.nll(&batch)?, 12));
        for v in values {
            println!("{}", significant(v, 12));
        }
    } else {
        println!("{}", significant(ssm.nll(&batch)?, 12));
    }
    Ok(())
}

pub fn sample(model: &Path, n: usize, seed: u64, out: &Path) -> Result<(), CliError> {
    if n == 0 {
        return Err(CliError::Usage("--n must be at least 1".into()));
    }
    let params = read_model(model)?;
    let batch = StateSpaceModel::new(&params)?.sample(n, seed)?;
    write_feature_matrix(&batch, out)?;
    Ok(())
}

pub fn aggregate(
    old: &Path,
    new: &Path,
    n_old: u64,
    n_new: u64,
    mode: AggregationMode,
    out: &Path,
) -> Result<(), CliError> {
    let weights = TaskWeights::new(n_old, n_new)?;
    let p_old = read_model(old)?;
    let p_new = read_model(new)?;
    if p_old.dim() != p_new.dim() {
        return Err(CliError::Usage(format!(
            "old model has dimension {} but new model has {}",
            p_old.dim(),
            p_new.dim()
        )));
    }
    let report = aggregate_refit(&p_old, &p_new, weights, &FitConfig::default(), mode)?;
    write_model(&report.params, out)?;
    println!("initial_loss {}", significant(report.initial_loss, 12));
    println!("final_loss {}", significant(report.final_loss, 12));
    Ok(())
}

fn group_thousands(v: u64) -> String {
    let digits = v.to_string();
    let mut out = String::new();
    for (i, ch) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(ch);
    }
    out
}

pub fn memreport(dims: &[u64], vectors_per_dim: u64) -> Result<(), CliError> {
    if dims.is_empty() || dims.contains(&0) {
        return Err(CliError::Usage("--dims must be a list of positive integers".into()));
    }
    if vectors_per_dim == 0 {
        return Err(CliError::Usage("--vectors-per-dim must be positive".into()));
    }
    let report = memory_report(dims, vectors_per_dim);
    println!("# sizes in MiB (2^20 bytes) and GiB (2^30 bytes)");
    println!("layer,dim,lcm_bytes,dense_bytes,lcm_mib,dense_gib,savings");
    let rows = report.rows.iter().enumerate().map(|(i, r)| ((i + 1).to_string(), r));
    for (label, r) in rows.chain(std::iter::once(("total".to_string(), &report.total))) {
        println!(
            "{label},{},{},{},{:.2},{:.2},{}",
            r.dim,
            r.lcm_bytes,
            r.dense_bytes,
            r.lcm_mib(),
            r.dense_gib(),
            r.savings_ratio
        );
    }
    println!(
        "total: {:.2} MiB vs {:.2} GiB dense, {}x smaller",
        report.total.lcm_mib(),
        report.total.dense_gib(),
        group_thousands(report.total.savings_ratio)
    );
    Ok(())
}
