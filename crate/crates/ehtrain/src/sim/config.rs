//! Experiment configuration: JSON-loadable, with defaults matching the
//! reference study (unit-SNR channel, unit-mean Poisson arrivals, 1000
//! trials per block length).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::energy::{ChannelParams, EnergyProfile};
use crate::policies::{self, FixedPolicy, PolicyOutcome, DEFAULT_ETE_GRID, DEFAULT_ROOT_TOL};
use crate::sim::SimError;

/// One policy entry in a sweep, tagged by `"policy"` in JSON, e.g.
/// `{"policy": "fixed_slots", "slots": 30}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case", deny_unknown_fields)]
pub enum PolicyConfig {
    /// Exhaustive `(n_t, e_te)` search.
    Optimal {
        #[serde(default = "default_ete_grid")]
        ete_grid_points: usize,
    },
    /// Water-filled rate-proxy optimizer.
    SubDwfRate {
        #[serde(default = "default_root_tol")]
        root_tol: f64,
    },
    /// Mean-power (constant-rate) proxy optimizer.
    SubConstRate {
        #[serde(default = "default_root_tol")]
        root_tol: f64,
    },
    /// Always train a fixed number of slots.
    FixedSlots { slots: usize },
    /// Train a fixed fraction of the block.
    FixedRatio { ratio: f64 },
    /// Always train one slot.
    OneSlot,
}

fn default_ete_grid() -> usize {
    DEFAULT_ETE_GRID
}

fn default_root_tol() -> f64 {
    DEFAULT_ROOT_TOL
}

impl PolicyConfig {
    /// Stable identifier used in CSV rows and sidecar columns. Matches the
    /// `policy_id` the evaluated outcome will carry.
    pub fn column_id(&self) -> String {
        match self {
            PolicyConfig::Optimal { .. } => "optimal".into(),
            PolicyConfig::SubDwfRate { .. } => "sub_dwf_rate".into(),
            PolicyConfig::SubConstRate { .. } => "sub_const_rate".into(),
            PolicyConfig::FixedSlots { slots } => format!("fixed_nt_{slots}"),
            PolicyConfig::FixedRatio { ratio } => format!("fixed_ratio_{ratio}"),
            PolicyConfig::OneSlot => "one_slot".into(),
        }
    }

    /// Run the configured policy on one profile.
    pub fn evaluate(
        &self,
        profile: &EnergyProfile,
        params: &ChannelParams,
    ) -> Result<PolicyOutcome, SimError> {
        let outcome = match *self {
            PolicyConfig::Optimal { ete_grid_points } => {
                policies::optimal_exhaustive(profile, params, ete_grid_points)?
            }
            PolicyConfig::SubDwfRate { root_tol } => {
                policies::suboptimal_dwf_rate_with(profile, params, root_tol)?
            }
            PolicyConfig::SubConstRate { root_tol } => {
                policies::suboptimal_constant_rate_with(profile, params, root_tol)?
            }
            PolicyConfig::FixedSlots { slots } => {
                policies::fixed_policy(profile, params, FixedPolicy::Slots(slots))?
            }
            PolicyConfig::FixedRatio { ratio } => {
                policies::fixed_policy(profile, params, FixedPolicy::Ratio(ratio))?
            }
            PolicyConfig::OneSlot => {
                policies::fixed_policy(profile, params, FixedPolicy::OneSlot)?
            }
        };
        Ok(outcome)
    }
}

/// Full description of a batch experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Block lengths `N` to sweep.
    pub block_lengths: Vec<usize>,
    /// Independent harvest profiles per block length.
    pub trials: usize,
    /// Poisson mean of the per-slot arrivals.
    pub lambda_e: f64,
    pub sigma_sq: f64,
    pub sigma_h_sq: f64,
    pub slot_duration: f64,
    /// Master seed; trial `t` draws its profile from substream `t`.
    pub seed: u64,
    pub policies: Vec<PolicyConfig>,
    /// Default CSV destination; a CLI `--out` overrides it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_path: Option<String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            block_lengths: vec![50, 100, 200, 400, 800, 1600],
            trials: 1000,
            lambda_e: 1.0,
            sigma_sq: 1.0,
            sigma_h_sq: 1.0,
            slot_duration: 1.0,
            seed: 7,
            policies: vec![
                PolicyConfig::Optimal {
                    ete_grid_points: DEFAULT_ETE_GRID,
                },
                PolicyConfig::SubDwfRate {
                    root_tol: DEFAULT_ROOT_TOL,
                },
                PolicyConfig::SubConstRate {
                    root_tol: DEFAULT_ROOT_TOL,
                },
                PolicyConfig::FixedSlots { slots: 30 },
                PolicyConfig::FixedRatio { ratio: 0.04 },
                PolicyConfig::OneSlot,
            ],
            output_path: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json_str(text: &str) -> Result<Self, SimError> {
        let config: Self =
            serde_json::from_str(text).map_err(|e| SimError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    pub fn channel_params(&self) -> Result<ChannelParams, SimError> {
        ChannelParams::new(self.sigma_h_sq, self.sigma_sq, self.slot_duration)
            .map_err(|e| SimError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.block_lengths.is_empty() {
            return Err(SimError::Config("block_lengths must not be empty".into()));
        }
        if let Some(&n) = self.block_lengths.iter().find(|&&n| n < 2) {
            return Err(SimError::Config(format!(
                "block length {n} too short: need at least 2 slots"
            )));
        }
        if self.trials == 0 {
            return Err(SimError::Config("trials must be at least 1".into()));
        }
        if !(self.lambda_e.is_finite() && self.lambda_e > 0.0) {
            return Err(SimError::Config(format!(
                "lambda_e must be positive, got {}",
                self.lambda_e
            )));
        }
        self.channel_params()?;
        for p in &self.policies {
            match *p {
                PolicyConfig::Optimal { ete_grid_points } if ete_grid_points < 2 => {
                    return Err(SimError::Config(format!(
                        "optimal policy needs ete_grid_points >= 2, got {ete_grid_points}"
                    )));
                }
                PolicyConfig::SubDwfRate { root_tol } | PolicyConfig::SubConstRate { root_tol }
                    if !(root_tol.is_finite() && root_tol > 0.0) =>
                {
                    return Err(SimError::Config(format!(
                        "root_tol must be positive, got {root_tol}"
                    )));
                }
                PolicyConfig::FixedSlots { slots } if slots < 1 => {
                    return Err(SimError::Config("fixed_slots needs slots >= 1".into()));
                }
                PolicyConfig::FixedRatio { ratio }
                    if !(ratio.is_finite() && ratio > 0.0 && ratio < 1.0) =>
                {
                    return Err(SimError::Config(format!(
                        "fixed_ratio needs 0 < ratio < 1, got {ratio}"
                    )));
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Pretty-printed JSON of the built-in defaults (the `--dump-defaults`
    /// payload; feed it back in via `--config`).
    pub fn dump_defaults() -> String {
        serde_json::to_string_pretty(&ExperimentConfig::default())
            .expect("default config serializes")
    }
}
