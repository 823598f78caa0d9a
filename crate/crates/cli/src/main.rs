//! `lcm`: fit, score, sample and aggregate Laplace covariance models, plus the
//! comparison, scaling and memory-accounting experiments.

mod bench;
mod commands;
mod compare;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use lcm_core::LcmError;

#[derive(Debug, Parser)]
#[command(name = "lcm", version, about = "Laplace covariance model toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a model to a feature matrix (.fmx or .csv) by Frobenius matching.
    Fit {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.01)]
        lr: f64,
        #[arg(long, default_value_t = 200)]
        epochs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Subtract column means first and store them as the model mean.
        /// Without this flag the input must already be centered.
        #[arg(long)]
        center: bool,
    },
    /// Mean Gaussian negative log-likelihood of a feature matrix.
    Nll {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        /// Also print one NLL per sample after the mean.
        #[arg(long)]
        per_sample: bool,
    },
    /// Draw samples from a model into an .fmx file.
    Sample {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Class-weighted aggregation of two models, re-fitted as one model.
    Aggregate {
        #[arg(long)]
        old: PathBuf,
        #[arg(long)]
        new: PathBuf,
        #[arg(long)]
        n_old: u64,
        #[arg(long)]
        n_new: u64,
        #[arg(long, value_enum, default_value_t = Mode::Dense)]
        mode: Mode,
        /// Total number of synthetic samples in sampled mode.
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Held-out log-likelihood of the LCM against a diagonal Gaussian on
    /// synthetic correlated features.
    Compare {
        #[arg(long)]
        dims: usize,
        #[arg(long)]
        n_train: usize,
        #[arg(long)]
        n_test: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// `ar1:<rho>` or `planted`.
        #[arg(long, default_value = "ar1:0.7")]
        structure: compare::Structure,
    },
    /// Time the decomposed Frobenius loss and the Kalman NLL across dimensions.
    Bench {
        #[arg(long, value_delimiter = ',', default_value = "1024,4096,16384,65536")]
        dims: Vec<usize>,
        #[arg(long, default_value_t = 8)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Storage of the LCM against a dense covariance for each dimension.
    Memreport {
        #[arg(long, value_delimiter = ',', default_value = "200704,100352,50176,25088")]
        dims: Vec<u64>,
        /// Stored binary64 vectors per dimension for the LCM.
        #[arg(long, default_value_t = 2)]
        vectors_per_dim: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Dense,
    Sampled,
}

/// Failure of a subcommand, carrying the process exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Runtime(_) => 1,
            CliError::Usage(_) => 2,
        }
    }
}

impl From<LcmError> for CliError {
    fn from(e: LcmError) -> Self {
        if e.is_usage() {
            CliError::Usage(e.to_string())
        } else {
            CliError::Runtime(e.to_string())
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Fit {
            input,
            out,
            lr,
            epochs,
            seed,
            center,
        } => commands::fit(&input, &out, lr, epochs, seed, center),
        Command::Nll {
            model,
            input,
            per_sample,
        } => commands::nll(&model, &input, per_sample),
        Command::Sample { model, n, seed, out } => commands::sample(&model, n, seed, &out),
        Command::Aggregate {
            old,
            new,
            n_old,
            n_new,
            mode,
            samples,
            seed,
            out,
        } => {
            let mode = match mode {
                Mode::Dense => lcm_core::AggregationMode::Dense,
                Mode::Sampled => lcm_core::AggregationMode::Sampled {
                    n_samples: samples,
                    seed,
                },
            };
            commands::aggregate(&old, &new, n_old, n_new, mode, &out)
        }
        Command::Compare {
            dims,
            n_train,
            n_test,
            seed,
            structure,
        } => compare::run(dims, n_train, n_test, seed, structure),
        Command::Bench { dims, n, seed } => bench::run(&dims, n, seed),
        Command::Memreport {
            dims,
            vectors_per_dim,
        } => commands::memreport(&dims, vectors_per_dim),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
