//! Achievable-rate model for a training-based block-fading link.
//!
//! The receiver forms an MMSE estimate of the Rayleigh channel gain from
//! the pilot energy `S` (summed training power). Writing `σ_h̃²` for the
//! estimation-error variance, each data slot transmitted at power `P`
//! contributes a rate term `exp(1/K)·E1(1/K)` with effective SNR factor
//!
//! `K = σ_ĥ²·P / (σ² + P·σ_h̃²)`,
//!
//! i.e. the estimated-channel power over noise *plus self-interference
//! from the estimation error*. Perfect CSI is the `S → ∞` limit, where
//! `K` becomes `σ_h²·P/σ²`. Rates are reported in bits per slot:
//! `log₂(e)/N · Σ_slots exp(1/K)E1(1/K)`.

use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dwf::{PowerAllocation, TrainingDecision};
use crate::energy::{uniform_f64, ChannelParams, EnergyProfile, RngSpec};
use crate::special;

pub const LOG2_E: f64 = std::f64::consts::LOG2_E;

#[derive(Debug, Error)]
pub enum ThroughputError {
    #[error("training power sum must be finite and non-negative, got {0}")]
    InvalidTrainingSum(f64),
    #[error("data allocation starts after slot {alloc_start} but training ends at slot {n_train}")]
    PhaseMismatch { alloc_start: usize, n_train: usize },
    #[error("allocation covers slots up to {alloc_end} but the block has {n} slots")]
    SpanMismatch { alloc_end: usize, n: usize },
    #[error("allocation must start at slot 0 for a full-block rate, got {0}")]
    NotFullBlock(usize),
    #[error("Monte Carlo needs at least 2 samples, got {0}")]
    TooFewSamples(u64),
}

/// MMSE estimator state after spending `training_power_sum` on pilots.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimationState {
    /// Variance `σ_h̃²` of the estimation error.
    pub error_var: f64,
    /// Variance `σ_ĥ²` of the estimate itself (`σ_h² = error + estimate`).
    pub estimate_var: f64,
    pub training_power_sum: f64,
}

/// MMSE estimation-error variance `σ²σ_h² / (σ² + σ_h²·S)`.
///
/// `S = 0` returns the prior (`σ_h²`, nothing learned); `S → ∞` drives the
/// error to zero. `estimate_var` is defined as the complement
/// `σ_h² − error_var`, so the pair always partitions the prior.
pub fn estimation_error_variance(
    training_power_sum: f64,
    params: &ChannelParams,
) -> Result<EstimationState, ThroughputError> {
    if !training_power_sum.is_finite() || training_power_sum < 0.0 {
        return Err(ThroughputError::InvalidTrainingSum(training_power_sum));
    }
    let error_var = params.sigma_sq * params.sigma_h_sq
        / (params.sigma_sq + params.sigma_h_sq * training_power_sum);
    Ok(EstimationState {
        error_var,
        estimate_var: params.sigma_h_sq - error_var,
        training_power_sum,
    })
}

/// Effective SNR factor for one data slot at power `data_power` after
/// training energy `training_power_sum`:
///
/// `K = σ_h⁴·P·S / (σ⁴ + σ²σ_h²·P + σ²σ_h²·S)`.
///
/// Zero whenever either power is zero; approaches the perfect-CSI value
/// `σ_h²·P/σ²` as `S → ∞`.
pub fn k_factor(data_power: f64, training_power_sum: f64, params: &ChannelParams) -> f64 {
    assert!(
        data_power.is_finite() && data_power >= 0.0,
        "data power must be finite and non-negative, got {data_power}"
    );
    assert!(
        training_power_sum.is_finite() && training_power_sum >= 0.0,
        "training power sum must be finite and non-negative, got {training_power_sum}"
    );
    let sh = params.sigma_h_sq;
    let s2 = params.sigma_sq;
    let num = sh * sh * data_power * training_power_sum;
    let den = s2 * s2 + s2 * sh * data_power + s2 * sh * training_power_sum;
    num / den
}

/// Rate kernel `exp(1/K)·E1(1/K)` in nats-compatible form (multiply by
/// `log₂e` for bits). Continuous at `K = 0` where the term vanishes.
pub fn slot_rate_term(k: f64) -> f64 {
    if k <= 0.0 {
        return 0.0;
    }
    let x = 1.0 / k;
    if !x.is_finite() {
        // k subnormal: the term is below f64 resolution anyway.
        return 0.0;
    }
    special::exp_e1(x).expect("rate kernel converges for positive finite arguments")
}

/// Bits/slot for a set of `(slot_count, power)` data intervals inside a
/// block of `n` slots, given the training power sum. This is the shared
/// hot path behind every policy's rate evaluation.
pub(crate) fn intervals_rate(
    intervals: &[(usize, f64)],
    training_power_sum: f64,
    n: usize,
    params: &ChannelParams,
) -> f64 {
    let mut sum = 0.0;
    for &(len, p) in intervals {
        sum += len as f64 * slot_rate_term(k_factor(p, training_power_sum, params));
    }
    LOG2_E * sum / n as f64
}

/// Full rate accounting for one block.
#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    /// Average rate over the whole block, bits per slot.
    pub bits_per_slot: f64,
    /// Kernel term per slot (zero over the training prefix), length `N`.
    pub per_slot_terms: Vec<f64>,
    pub n_train: usize,
}

/// Rate achieved by a concrete `(training, data allocation)` pair on a
/// block of `profile.len()` slots.
pub fn block_throughput(
    profile: &EnergyProfile,
    decision: &TrainingDecision,
    data_alloc: &PowerAllocation,
    params: &ChannelParams,
) -> Result<RateReport, ThroughputError> {
    let n = profile.len();
    if data_alloc.start_slot != decision.n_train {
        return Err(ThroughputError::PhaseMismatch {
            alloc_start: data_alloc.start_slot,
            n_train: decision.n_train,
        });
    }
    if data_alloc.last_slot() != n {
        return Err(ThroughputError::SpanMismatch {
            alloc_end: data_alloc.last_slot(),
            n,
        });
    }
    let s = decision.energy_sum / params.slot_duration;
    if !s.is_finite() || s < 0.0 {
        return Err(ThroughputError::InvalidTrainingSum(s));
    }
    let mut per_slot_terms = vec![0.0; decision.n_train];
    per_slot_terms.reserve(n - decision.n_train);
    let mut sum = 0.0;
    for (len, p) in data_alloc.intervals() {
        let term = slot_rate_term(k_factor(p, s, params));
        for _ in 0..len {
            per_slot_terms.push(term);
            sum += term;
        }
    }
    Ok(RateReport {
        bits_per_slot: LOG2_E * sum / n as f64,
        per_slot_terms,
        n_train: decision.n_train,
    })
}

/// Rate of a whole-block allocation under perfect channel knowledge
/// (no training phase; `K = σ_h²·P/σ²` in every slot).
pub fn perfect_csi_throughput(
    data_alloc: &PowerAllocation,
    params: &ChannelParams,
) -> Result<RateReport, ThroughputError> {
    if data_alloc.start_slot != 0 {
        return Err(ThroughputError::NotFullBlock(data_alloc.start_slot));
    }
    let n = data_alloc.last_slot();
    let mut per_slot_terms = Vec::with_capacity(n);
    let mut sum = 0.0;
    for (len, p) in data_alloc.intervals() {
        let term = slot_rate_term(params.sigma_h_sq * p / params.sigma_sq);
        for _ in 0..len {
            per_slot_terms.push(term);
            sum += term;
        }
    }
    Ok(RateReport {
        bits_per_slot: LOG2_E * sum / n as f64,
        per_slot_terms,
        n_train: 0,
    })
}

/// Monte Carlo estimate of a block's rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub bits_per_slot: f64,
    /// Standard error of the mean.
    pub stderr: f64,
    pub samples: u64,
}

/// Samples drawn per RNG substream; the oracle consumes stream indices
/// `spec.stream_index .. spec.stream_index + ceil(samples / MC_BLOCK)`.
pub const MC_BLOCK: u64 = 1 << 16;

/// Estimate the block rate by sampling the channel estimate.
///
/// Each sample draws `ĥ ~ CN(0, σ_ĥ²)` (Box–Muller) and averages
/// `log₂(1 + |ĥ|²·P/(σ² + P·σ_h̃²))` over the data slots. Converges to
/// [`block_throughput`]'s closed form. Work is split into fixed 2^16-sample
/// substream blocks merged in index order, so the result is bit-identical
/// for any thread count; with a fixed `spec` it is fully reproducible.
pub fn mc_throughput_oracle(
    profile: &EnergyProfile,
    decision: &TrainingDecision,
    data_alloc: &PowerAllocation,
    params: &ChannelParams,
    samples: u64,
    spec: RngSpec,
) -> Result<McEstimate, ThroughputError> {
    if samples < 2 {
        return Err(ThroughputError::TooFewSamples(samples));
    }
    if data_alloc.start_slot != decision.n_train {
        return Err(ThroughputError::PhaseMismatch {
            alloc_start: data_alloc.start_slot,
            n_train: decision.n_train,
        });
    }
    let n = profile.len();
    if data_alloc.last_slot() != n {
        return Err(ThroughputError::SpanMismatch {
            alloc_end: data_alloc.last_slot(),
            n,
        });
    }
    let s = decision.energy_sum / params.slot_duration;
    let est = estimation_error_variance(s, params)?;
    let intervals: Vec<(usize, f64)> = data_alloc.intervals().collect();

    let n_blocks = samples.div_ceil(MC_BLOCK);
    let partials: Vec<(f64, f64)> = (0..n_blocks)
        .map(|b| {
            let count = if b + 1 == n_blocks {
                samples - b * MC_BLOCK
            } else {
                MC_BLOCK
            };
            let mut rng = RngSpec::new(spec.seed, spec.stream_index + b).rng();
            block_partial(&mut rng, count, &intervals, est, n, params)
        })
        .collect();

    let mut sum = 0.0;
    let mut sumsq = 0.0;
    for (a, b) in partials {
        sum += a;
        sumsq += b;
    }
    let count = samples as f64;
    let mean = sum / count;
    let var = ((sumsq - count * mean * mean) / (count - 1.0)).max(0.0);
    Ok(McEstimate {
        bits_per_slot: mean,
        stderr: (var / count).sqrt(),
        samples,
    })
}

fn block_partial(
    rng: &mut ChaCha8Rng,
    count: u64,
    intervals: &[(usize, f64)],
    est: EstimationState,
    n: usize,
    params: &ChannelParams,
) -> (f64, f64) {
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    for _ in 0..count {
        // |ĥ|² from a Box–Muller complex Gaussian with variance σ_ĥ².
        let u1 = 1.0 - uniform_f64(rng); // (0, 1]
        let u2 = uniform_f64(rng);
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = 2.0 * std::f64::consts::PI * u2;
        let z0 = radius * angle.cos();
        let z1 = radius * angle.sin();
        let h_sq = (z0 * z0 + z1 * z1) * (est.estimate_var / 2.0);

        let mut bits = 0.0;
        for &(len, p) in intervals {
            let snr = h_sq * p / (params.sigma_sq + p * est.error_var);
            bits += len as f64 * (1.0 + snr).log2();
        }
        let rate = bits / n as f64;
        sum += rate;
        sumsq += rate * rate;
    }
    (sum, sumsq)
}
