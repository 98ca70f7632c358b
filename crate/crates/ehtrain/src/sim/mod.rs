//! Batch experiment drivers behind the `ehtrain` CLI.
//!
//! Every driver follows the same reproducibility contract: harvest profiles
//! and Monte Carlo noise come from counter-based RNG substreams keyed by
//! `(seed, stream)`, work is parallelized over trials with results merged
//! in trial order, and floating-point output is rendered with Rust's
//! shortest-roundtrip formatting — so a fixed seed yields byte-identical
//! artifacts regardless of `--jobs`.
//!
//! Substream layout for a master seed:
//! - streams `0 .. trials`: sweep harvest profiles (one per trial);
//! - streams `2^32 + c`: parameter draws for validation case `c`;
//! - streams `2^33 + c`: harvest profile for validation case `c`;
//! - streams `2^34 + c·2^16 + b`: Monte Carlo block `b` of validation
//!   case `c`.

use thiserror::Error;

use crate::dwf::DwfError;
use crate::energy::EnergyError;
use crate::policies::PolicyError;
use crate::throughput::ThroughputError;

mod config;
mod fixed_nt;
mod solve;
mod sweep;
mod validate;

pub use config::{ExperimentConfig, PolicyConfig};
pub use fixed_nt::{default_nt_grid, run_fixed_nt_sweep, FixedNtReport, FixedNtRow};
pub use solve::{solve_single, SolveReport};
pub use sweep::{run_policy_sweep, SweepResult, SweepRow, TrialRecord};
pub use validate::{validate_closed_form, ValidationCase, ValidationReport};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error(transparent)]
    Dwf(#[from] DwfError),
    #[error(transparent)]
    Throughput(#[from] ThroughputError),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("failed to build worker pool: {0}")]
    Pool(String),
}

/// Build a rayon pool with `jobs` workers (0 = one per core).
pub(crate) fn worker_pool(jobs: usize) -> Result<rayon::ThreadPool, SimError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| SimError::Pool(e.to_string()))
}

/// Mean and standard error of a sample.
pub(crate) fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1.0) / n).sqrt())
}

/// Stream base for validation-case parameter draws.
pub(crate) const VALIDATE_PARAM_STREAM: u64 = 1 << 32;
/// Stream base for validation-case harvest profiles.
pub(crate) const VALIDATE_PROFILE_STREAM: u64 = 1 << 33;
/// Stream base for validation-case Monte Carlo blocks (stride 2^16 per
/// case, matching [`crate::throughput::MC_BLOCK`] sub-blocks).
pub(crate) const VALIDATE_MC_STREAM: u64 = 1 << 34;
