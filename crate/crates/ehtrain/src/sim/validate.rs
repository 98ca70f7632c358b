//! Closed-form vs Monte Carlo validation of the rate model.
//!
//! Each case draws a random small scenario (block length, channel
//! variances, training period, final-slot carry-over), computes the block
//! rate twice — once from the closed form, once by sampling the channel
//! estimate — and requires agreement within `max(3·stderr, 0.1% of the
//! closed form)`. Case 0 is pinned to a zero-training-energy scenario,
//! where both sides must return exactly zero.

use rand_chacha::rand_core::RngCore;
use rayon::prelude::*;
use serde::Serialize;

use crate::dwf::{dwf_suffix, training_split};
use crate::energy::{uniform_f64, ChannelParams, EnergyProfile, RngSpec};
use crate::throughput::{block_throughput, mc_throughput_oracle, MC_BLOCK};
use crate::sim::{
    worker_pool, ExperimentConfig, SimError, VALIDATE_MC_STREAM, VALIDATE_PARAM_STREAM,
    VALIDATE_PROFILE_STREAM,
};

#[derive(Debug, Clone, Serialize)]
pub struct ValidationCase {
    pub index: usize,
    pub n: usize,
    pub n_train: usize,
    pub leftover: f64,
    pub sigma_h_sq: f64,
    pub sigma_sq: f64,
    pub closed_form: f64,
    pub mc_estimate: f64,
    pub mc_stderr: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub schema: u32,
    pub kind: &'static str,
    pub seed: u64,
    pub samples: u64,
    pub cases: Vec<ValidationCase>,
    pub passed: bool,
}

impl ValidationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One line per case for terminal output.
    pub fn human_summary(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::new();
        for c in &self.cases {
            let _ = writeln!(
                out,
                "case {:>2}: N={:<3} n_t={:<3} e_te={:<8.4} cf={:<12.8} mc={:<12.8} \
                 |diff|={:.3e} tol={:.3e} {}",
                c.index,
                c.n,
                c.n_train,
                c.leftover,
                c.closed_form,
                c.mc_estimate,
                (c.mc_estimate - c.closed_form).abs(),
                c.tolerance,
                if c.passed { "PASS" } else { "FAIL" }
            );
        }
        let _ = writeln!(
            out,
            "{}/{} cases within tolerance",
            self.cases.iter().filter(|c| c.passed).count(),
            self.cases.len()
        );
        out
    }
}

fn run_case(
    index: usize,
    config: &ExperimentConfig,
    samples: u64,
) -> Result<ValidationCase, SimError> {
    let seed = config.seed;
    let (profile, params, n_t, e_te) = if index == 0 {
        // Pinned scenario: nothing harvested before training ends, so the
        // training energy is exactly zero and both estimators must return
        // a rate of exactly zero.
        let profile = EnergyProfile::new(vec![0.0, 2.0, 1.0])?;
        let params = ChannelParams::new(config.sigma_h_sq, config.sigma_sq, config.slot_duration)
            .map_err(|e| SimError::Config(e.to_string()))?;
        (profile, params, 1usize, 0.0)
    } else {
        let c = index as u64;
        let mut draw = RngSpec::new(seed, VALIDATE_PARAM_STREAM + c).rng();
        let n = 2 + (draw.next_u64() % 11) as usize; // 2..=12
        let sigma_h_sq = 0.25 * 16f64.powf(uniform_f64(&mut draw));
        let sigma_sq = 0.25 * 16f64.powf(uniform_f64(&mut draw));
        let n_t = 1 + (draw.next_u64() % (n as u64 - 1)) as usize;
        let leftover_frac = uniform_f64(&mut draw);
        let profile = EnergyProfile::poisson(
            n,
            config.lambda_e,
            RngSpec::new(seed, VALIDATE_PROFILE_STREAM + c),
        )?;
        let params = ChannelParams::new(sigma_h_sq, sigma_sq, config.slot_duration)
            .map_err(|e| SimError::Config(e.to_string()))?;
        let e_te = leftover_frac * profile.energy(n_t - 1);
        (profile, params, n_t, e_te)
    };

    let decision = training_split(&profile, n_t, e_te, &params)?;
    let alloc = dwf_suffix(&profile, n_t, e_te, &params)?;
    let closed_form = block_throughput(&profile, &decision, &alloc, &params)?.bits_per_slot;
    let mc = mc_throughput_oracle(
        &profile,
        &decision,
        &alloc,
        &params,
        samples,
        RngSpec::new(seed, VALIDATE_MC_STREAM + index as u64 * MC_BLOCK),
    )?;
    let tolerance = (3.0 * mc.stderr).max(1e-3 * closed_form.abs());
    Ok(ValidationCase {
        index,
        n: profile.len(),
        n_train: n_t,
        leftover: e_te,
        sigma_h_sq: params.sigma_h_sq,
        sigma_sq: params.sigma_sq,
        closed_form,
        mc_estimate: mc.bits_per_slot,
        mc_stderr: mc.stderr,
        tolerance,
        passed: (mc.bits_per_slot - closed_form).abs() <= tolerance,
    })
}

/// Run `cases` randomized closed-form-vs-sampling comparisons with
/// `samples` Monte Carlo draws each.
pub fn validate_closed_form(
    config: &ExperimentConfig,
    cases: usize,
    samples: u64,
    jobs: usize,
) -> Result<ValidationReport, SimError> {
    config.validate()?;
    if cases == 0 {
        return Err(SimError::Config("need at least one validation case".into()));
    }
    if samples < 2 {
        return Err(SimError::Config(format!(
            "need at least 2 Monte Carlo samples, got {samples}"
        )));
    }
    let pool = worker_pool(jobs)?;
    let results: Vec<ValidationCase> = pool.install(|| {
        (0..cases)
            .into_par_iter()
            .map(|c| run_case(c, config, samples))
            .collect::<Result<Vec<_>, SimError>>()
    })?;
    let passed = results.iter().all(|c| c.passed);
    Ok(ValidationReport {
        schema: 1,
        kind: "validate",
        seed: config.seed,
        samples,
        cases: results,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_energy_case_is_exact() {
        let config = ExperimentConfig::default();
        let report = validate_closed_form(&config, 1, 1000, 1).unwrap();
        let c = &report.cases[0];
        assert_eq!(c.closed_form, 0.0);
        assert_eq!(c.mc_estimate, 0.0);
        assert!(c.passed);
    }

    #[test]
    fn small_validation_passes_and_is_deterministic() {
        let config = ExperimentConfig::default();
        let a = validate_closed_form(&config, 5, 60_000, 1).unwrap();
        let b = validate_closed_form(&config, 5, 60_000, 2).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        assert!(a.passed, "summary:\n{}", a.human_summary());
        assert!(a.human_summary().contains("PASS"));
    }

    #[test]
    fn rejects_degenerate_requests() {
        let config = ExperimentConfig::default();
        assert!(validate_closed_form(&config, 0, 100, 1).is_err());
        assert!(validate_closed_form(&config, 1, 1, 1).is_err());
    }
}
