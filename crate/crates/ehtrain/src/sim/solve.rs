//! Single-profile solve: run one policy on one profile and report the full
//! schedule (training powers, carry-over, data allocation, rate).

use serde::Serialize;

use crate::dwf::{training_split, PowerAllocation, TrainingDecision};
use crate::energy::{ChannelParams, EnergyProfile};
use crate::sim::{PolicyConfig, SimError};

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub schema: u32,
    pub policy_id: String,
    pub n_train: usize,
    pub leftover_energy: f64,
    pub rate_bits_per_slot: f64,
    pub clamped: bool,
    pub block_slots: usize,
    pub total_energy: f64,
    pub profile_hash: String,
    pub training: TrainingDecision,
    pub data_alloc: PowerAllocation,
}

impl SolveReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Short terminal rendering of the schedule.
    pub fn human_summary(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "policy {} on {} slots ({} energy total, hash {})",
            self.policy_id, self.block_slots, self.total_energy, self.profile_hash
        );
        let _ = writeln!(
            out,
            "  train {} slot(s), carry {} energy forward{}",
            self.n_train,
            self.leftover_energy,
            if self.clamped {
                " [period clamped into range]"
            } else {
                ""
            }
        );
        let _ = writeln!(out, "  rate {} bits/slot", self.rate_bits_per_slot);
        let mut start = self.data_alloc.start_slot;
        for (end, p) in self
            .data_alloc
            .breakpoints
            .iter()
            .zip(&self.data_alloc.powers)
        {
            let _ = writeln!(out, "  data slots {:>4}..={:<4} power {}", start + 1, end, p);
            start = *end;
        }
        out
    }
}

/// Evaluate `policy` on `profile` and package the executed schedule.
pub fn solve_single(
    profile: &EnergyProfile,
    params: &ChannelParams,
    policy: &PolicyConfig,
) -> Result<SolveReport, SimError> {
    let outcome = policy.evaluate(profile, params)?;
    let training = training_split(profile, outcome.n_train, outcome.leftover_energy, params)?;
    Ok(SolveReport {
        schema: 1,
        policy_id: outcome.policy_id,
        n_train: outcome.n_train,
        leftover_energy: outcome.leftover_energy,
        rate_bits_per_slot: outcome.rate_bits_per_slot,
        clamped: outcome.clamped,
        block_slots: profile.len(),
        total_energy: profile.total_energy(),
        profile_hash: profile.content_hash_hex(),
        training,
        data_alloc: outcome.data_alloc,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_reference_block() {
        let profile = EnergyProfile::new(vec![2.0, 0.0]).unwrap();
        let params = ChannelParams::default();
        let report = solve_single(
            &profile,
            &params,
            &PolicyConfig::Optimal { ete_grid_points: 65 },
        )
        .unwrap();
        assert_eq!(report.schema, 1);
        assert_eq!(report.n_train, 1);
        assert!((report.leftover_energy - 1.0).abs() < 1e-5);
        assert_eq!(report.training.n_train, 1);
        assert_eq!(report.data_alloc.start_slot, 1);
        let json = report.to_json();
        assert!(json.contains("\"policy_id\": \"optimal\""));
        assert!(json.contains("\"breakpoints\""));
        let text = report.human_summary();
        assert!(text.contains("bits/slot"));
    }

    #[test]
    fn solve_one_slot_on_flat_profile() {
        let profile = EnergyProfile::constant(4, 1.0).unwrap();
        let params = ChannelParams::default();
        let report = solve_single(&profile, &params, &PolicyConfig::OneSlot).unwrap();
        assert_eq!(report.n_train, 1);
        assert_eq!(report.policy_id, "one_slot");
        assert_eq!(report.leftover_energy, 0.0);
    }
}
