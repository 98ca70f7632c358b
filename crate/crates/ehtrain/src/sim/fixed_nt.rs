//! Fixed-training-period sweep at one block length: how much rate is lost
//! by pinning `n_t` instead of optimizing it, as a function of `n_t`.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::dwf::segment_buf;
use crate::energy::{EnergyProfile, RngSpec};
use crate::policies::{optimal_exhaustive, DEFAULT_ETE_GRID};
use crate::sim::{mean_stderr, worker_pool, ExperimentConfig, PolicyConfig, SimError};
use crate::throughput::intervals_rate;
use crate::SuffixAllocator;

/// Default `n_t` grid at block length `n`: every value up to 400, sparse
/// checkpoints beyond, and always the largest legal period `n-1`.
pub fn default_nt_grid(n: usize) -> Vec<usize> {
    let mut grid: Vec<usize> = (1..=400.min(n.saturating_sub(1))).collect();
    for extra in [450usize, 500, 600, 800, 1000] {
        if extra < n {
            grid.push(extra);
        }
    }
    if n >= 2 {
        grid.push(n - 1);
    }
    grid.sort_unstable();
    grid.dedup();
    grid
}

/// Aggregate over trials for one fixed training period.
#[derive(Debug, Clone, Serialize)]
pub struct FixedNtRow {
    pub n_t: usize,
    pub mean_rate_bits_per_slot: f64,
    pub stderr: f64,
    /// Relative shortfall vs the per-trial optimal policy's mean rate:
    /// `1 - mean_rate / optimal_mean`.
    pub gap_to_optimal: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FixedNtReport {
    pub schema: u32,
    pub kind: &'static str,
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub optimal_mean: f64,
    pub optimal_stderr: f64,
    pub rows: Vec<FixedNtRow>,
    /// Maximal contiguous grid runs with gap ≤ 5%, as `(first, last)` n_t.
    pub five_pct_intervals: Vec<(usize, usize)>,
    /// Maximal contiguous grid runs with gap ≤ 10%.
    pub ten_pct_intervals: Vec<(usize, usize)>,
}

impl FixedNtReport {
    /// Maximal contiguous grid runs whose gap stays within `threshold`.
    pub fn intervals_below(&self, threshold: f64) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let mut run: Option<(usize, usize)> = None;
        for row in &self.rows {
            if row.gap_to_optimal <= threshold {
                run = Some(match run {
                    Some((start, _)) => (start, row.n_t),
                    None => (row.n_t, row.n_t),
                });
            } else if let Some(r) = run.take() {
                out.push(r);
            }
        }
        if let Some(r) = run {
            out.push(r);
        }
        out
    }

    /// The widest run within `threshold` (by covered n_t span).
    pub fn widest_interval(&self, threshold: f64) -> Option<(usize, usize)> {
        self.intervals_below(threshold)
            .into_iter()
            .max_by_key(|&(a, b)| b - a)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("n_t,mean_rate_bits_per_slot,stderr,gap_to_optimal\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                r.n_t, r.mean_rate_bits_per_slot, r.stderr, r.gap_to_optimal
            );
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

struct TrialRates {
    optimal: f64,
    fixed: Vec<f64>,
}

fn run_trial(
    n: usize,
    trial: usize,
    config: &ExperimentConfig,
    grid: &[usize],
    ete_grid_points: usize,
) -> Result<TrialRates, SimError> {
    let params = config.channel_params()?;
    let profile = EnergyProfile::poisson(
        n,
        config.lambda_e,
        RngSpec::new(config.seed, trial as u64),
    )?;
    let optimal = optimal_exhaustive(&profile, &params, ete_grid_points)?.rate_bits_per_slot;

    let allocator = SuffixAllocator::new(&profile, &params);
    let mut scratch = segment_buf();
    let mut intervals: Vec<(usize, f64)> = Vec::new();
    let t_s = params.slot_duration;
    let fixed = grid
        .iter()
        .map(|&n_t| {
            let s = profile.cumulative_available(n_t) / t_s;
            allocator.suffix_intervals(n_t, 0.0, &mut scratch, &mut intervals);
            intervals_rate(&intervals, s, n, &params)
        })
        .collect();
    Ok(TrialRates { optimal, fixed })
}

/// Sweep fixed training periods over `nt_values` (or the default grid) at
/// block length `n`, against the optimal policy on the same profiles.
/// Grid entries outside `1..=n-1` are dropped.
pub fn run_fixed_nt_sweep(
    config: &ExperimentConfig,
    n: usize,
    nt_values: Option<&[usize]>,
    jobs: usize,
) -> Result<FixedNtReport, SimError> {
    config.validate()?;
    if n < 2 {
        return Err(SimError::Config(format!(
            "block length {n} too short for a fixed-period sweep"
        )));
    }
    let mut grid: Vec<usize> = match nt_values {
        Some(values) => values.to_vec(),
        None => default_nt_grid(n),
    };
    grid.retain(|&v| v >= 1 && v < n);
    grid.sort_unstable();
    grid.dedup();
    if grid.is_empty() {
        return Err(SimError::Config(
            "no usable fixed training periods in the grid".into(),
        ));
    }
    // Match the sweep's exhaustive-search resolution if one is configured.
    let ete_grid_points = config
        .policies
        .iter()
        .find_map(|p| match p {
            PolicyConfig::Optimal { ete_grid_points } => Some(*ete_grid_points),
            _ => None,
        })
        .unwrap_or(DEFAULT_ETE_GRID);

    let pool = worker_pool(jobs)?;
    let trials: Vec<TrialRates> = pool.install(|| {
        (0..config.trials)
            .into_par_iter()
            .map(|t| run_trial(n, t, config, &grid, ete_grid_points))
            .collect::<Result<Vec<_>, SimError>>()
    })?;

    let optimal_rates: Vec<f64> = trials.iter().map(|t| t.optimal).collect();
    let (optimal_mean, optimal_stderr) = mean_stderr(&optimal_rates);

    let rows: Vec<FixedNtRow> = grid
        .iter()
        .enumerate()
        .map(|(j, &n_t)| {
            let rates: Vec<f64> = trials.iter().map(|t| t.fixed[j]).collect();
            let (mean, stderr) = mean_stderr(&rates);
            let gap = if optimal_mean > 0.0 {
                1.0 - mean / optimal_mean
            } else {
                0.0
            };
            FixedNtRow {
                n_t,
                mean_rate_bits_per_slot: mean,
                stderr,
                gap_to_optimal: gap,
            }
        })
        .collect();

    let mut report = FixedNtReport {
        schema: 1,
        kind: "fixed_nt_sweep",
        n,
        trials: config.trials,
        seed: config.seed,
        optimal_mean,
        optimal_stderr,
        rows,
        five_pct_intervals: Vec::new(),
        ten_pct_intervals: Vec::new(),
    };
    report.five_pct_intervals = report.intervals_below(0.05);
    report.ten_pct_intervals = report.intervals_below(0.10);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_shapes() {
        let g = default_nt_grid(1250);
        assert_eq!(g.first(), Some(&1));
        assert!(g.contains(&400));
        assert!(g.contains(&450));
        assert!(g.contains(&1000));
        assert_eq!(g.last(), Some(&1249));
        assert_eq!(g.len(), 400 + 6);

        let small = default_nt_grid(12);
        assert_eq!(small, (1..=11).collect::<Vec<_>>());
    }

    #[test]
    fn sweep_report_and_gaps() {
        let config = ExperimentConfig {
            block_lengths: vec![30],
            trials: 12,
            policies: vec![PolicyConfig::Optimal { ete_grid_points: 9 }],
            ..ExperimentConfig::default()
        };
        let report = run_fixed_nt_sweep(&config, 30, None, 1).unwrap();
        assert_eq!(report.n, 30);
        assert_eq!(report.rows.len(), 29);
        assert!(report.optimal_mean > 0.0);
        for row in &report.rows {
            // The optimal policy scans every n_t at e_te = 0, so no fixed
            // period can exceed it even before averaging.
            assert!(row.gap_to_optimal >= 0.0, "negative gap at {}", row.n_t);
            assert!(row.gap_to_optimal <= 1.0);
        }
        // Gaps must blow up as training eats the whole block.
        assert!(report.rows.last().unwrap().gap_to_optimal > 0.3);

        let csv = report.to_csv();
        assert!(csv.starts_with("n_t,mean_rate_bits_per_slot,stderr,gap_to_optimal\n"));
        assert_eq!(csv.lines().count(), 1 + 29);
        assert!(report.to_json().contains("\"schema\": 1"));
    }

    #[test]
    fn interval_extraction() {
        let report = FixedNtReport {
            schema: 1,
            kind: "fixed_nt_sweep",
            n: 10,
            trials: 1,
            seed: 0,
            optimal_mean: 1.0,
            optimal_stderr: 0.0,
            rows: [0.2, 0.04, 0.01, 0.03, 0.2, 0.04, 0.2]
                .iter()
                .enumerate()
                .map(|(i, &gap)| FixedNtRow {
                    n_t: i + 1,
                    mean_rate_bits_per_slot: 1.0 - gap,
                    stderr: 0.0,
                    gap_to_optimal: gap,
                })
                .collect(),
            five_pct_intervals: Vec::new(),
            ten_pct_intervals: Vec::new(),
        };
        assert_eq!(report.intervals_below(0.05), vec![(2, 4), (6, 6)]);
        assert_eq!(report.widest_interval(0.05), Some((2, 4)));
        assert_eq!(report.widest_interval(0.001), None);
    }

    #[test]
    fn custom_grid_is_filtered_and_sorted() {
        let config = ExperimentConfig {
            block_lengths: vec![10],
            trials: 3,
            policies: vec![],
            ..ExperimentConfig::default()
        };
        let report = run_fixed_nt_sweep(&config, 10, Some(&[9, 2, 2, 50, 5]), 1).unwrap();
        let grid: Vec<usize> = report.rows.iter().map(|r| r.n_t).collect();
        assert_eq!(grid, vec![2, 5, 9]);
        assert!(run_fixed_nt_sweep(&config, 10, Some(&[50]), 1).is_err());
    }
}
