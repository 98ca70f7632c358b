//! Training-period schedulers, from exhaustive search to fixed rules.
//!
//! Every policy answers the same question for one harvest profile: how many
//! slots `n_t` to spend on channel training, and (for the exhaustive search
//! only) how much of the final training slot's energy to carry into the
//! data phase. All policies *execute* identically — training powers from
//! [`training_split`], data powers by suffix water-filling, rate from the
//! shared closed form — so their reported rates are directly comparable,
//! and the exhaustive policy dominates the others exactly, not just up to
//! rounding.
//!
//! - [`optimal_exhaustive`]: scan every `(n_t, e_te)` on a grid, then
//!   refine `e_te` locally. The benchmark everything else is measured
//!   against.
//! - [`suboptimal_dwf_rate`]: maximize a smooth rate proxy built on the
//!   whole-block water-filling powers; the optimizer is the root of a
//!   stationarity residual, found by bisection and rounded to the better
//!   neighbor.
//! - [`suboptimal_constant_rate`] / [`constant_rate_optimum`]: the same
//!   idea with the profile replaced by its average power; for constant
//!   arrivals the two proxies coincide exactly.
//! - [`asymptotic_training_period`]: closed-form large-`N` limit of the
//!   proxy optimizer; no root search at all.
//! - [`fixed_policy`]: fixed slot count, fixed fraction of the block, or a
//!   single pilot slot, clamped into range when the block is too short.
//! - [`upper_bound_perfect_csi`] / [`upper_bound_non_eh`]: relaxations
//!   (free CSI; causality removed) that cap what any policy can achieve.

use serde::Serialize;
use thiserror::Error;

use crate::dwf::{
    dwf_allocate, dwf_suffix, segment_buf, training_split, DwfError, PowerAllocation,
    SuffixAllocator,
};
use crate::energy::{ChannelParams, EnergyProfile};
use crate::throughput::{
    intervals_rate, k_factor, perfect_csi_throughput, slot_rate_term, ThroughputError, LOG2_E,
};

/// Default bisection tolerance on `1/n_t` for the proxy-optimum root.
pub const DEFAULT_ROOT_TOL: f64 = 1e-10;

/// Default number of leftover-energy grid points for the exhaustive scan.
pub const DEFAULT_ETE_GRID: usize = 65;

/// Relative width (vs the final slot's arrival) at which the local
/// leftover-energy refinement stops.
const ETE_REFINE_REL_TOL: f64 = 1e-6;

/// Tolerance on the training-energy fraction for the non-causal bound.
const RHO_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("profile needs at least 2 slots (training + data), got {0}")]
    ProfileTooShort(usize),
    #[error("leftover-energy grid needs at least 2 points, got {0}")]
    InvalidGrid(usize),
    #[error("fixed training period must be at least 1 slot, got {0}")]
    InvalidFixedSlots(usize),
    #[error("fixed training ratio must lie strictly between 0 and 1, got {0}")]
    InvalidFixedRatio(f64),
    #[error("{name} must be finite and non-negative, got {value}")]
    InvalidArgument { name: &'static str, value: f64 },
    #[error("asymptotic training period undefined: {0}")]
    ModelDomain(String),
    #[error(transparent)]
    Dwf(#[from] DwfError),
    #[error(transparent)]
    Throughput(#[from] ThroughputError),
}

/// What a policy decided and what it achieved on one block.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicyOutcome {
    pub policy_id: String,
    /// Chosen training period (slots). Bounds report 0 (perfect CSI, no
    /// training) or 1 (non-causal bound's single pilot phase).
    pub n_train: usize,
    /// Energy left in the battery at the end of training.
    pub leftover_energy: f64,
    /// Data-phase power schedule actually executed.
    pub data_alloc: PowerAllocation,
    pub rate_bits_per_slot: f64,
    /// True when the requested training period had to be clamped into
    /// `1..=N-1`.
    pub clamped: bool,
}

/// Golden-section maximization tracking the best evaluation ever seen, so
/// a refinement can only improve on the incumbent it starts from.
fn golden_max<F: FnMut(f64) -> f64>(f: &mut F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut best_x = lo;
    let mut best_v = f(lo);
    let v_hi = f(hi);
    if v_hi > best_v {
        best_x = hi;
        best_v = v_hi;
    }
    if hi - lo <= tol {
        return (best_x, best_v);
    }
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..200 {
        if f1 > best_v {
            best_x = x1;
            best_v = f1;
        }
        if f2 > best_v {
            best_x = x2;
            best_v = f2;
        }
        if hi - lo <= tol {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        }
    }
    (best_x, best_v)
}

/// Execute a zero-leftover training decision and package the outcome.
fn execute_zero_leftover(
    profile: &EnergyProfile,
    params: &ChannelParams,
    n_t: usize,
    policy_id: String,
    clamped: bool,
) -> Result<PolicyOutcome, PolicyError> {
    let decision = training_split(profile, n_t, 0.0, params)?;
    let data_alloc = dwf_suffix(profile, n_t, 0.0, params)?;
    let s = decision.energy_sum / params.slot_duration;
    let intervals: Vec<(usize, f64)> = data_alloc.intervals().collect();
    let rate = intervals_rate(&intervals, s, profile.len(), params);
    Ok(PolicyOutcome {
        policy_id,
        n_train: n_t,
        leftover_energy: 0.0,
        data_alloc,
        rate_bits_per_slot: rate,
        clamped,
    })
}

/// Joint exhaustive search over the training period and the final-slot
/// energy carry-over.
///
/// Every `n_t ∈ 1..N` is paired with `ete_grid_points` evenly spaced
/// carry-over values in `[0, E_{n_t-1}]` (a single point when that arrival
/// is zero); the best cell's carry-over is then refined by golden section
/// between its grid neighbors. Ties keep the smallest `n_t`, then the
/// smallest carry-over. Because `e_te = 0` is always on the grid and all
/// policies share one rate path, the result dominates every zero-leftover
/// policy exactly.
pub fn optimal_exhaustive(
    profile: &EnergyProfile,
    params: &ChannelParams,
    ete_grid_points: usize,
) -> Result<PolicyOutcome, PolicyError> {
    let n = profile.len();
    if n < 2 {
        return Err(PolicyError::ProfileTooShort(n));
    }
    if ete_grid_points < 2 {
        return Err(PolicyError::InvalidGrid(ete_grid_points));
    }
    let allocator = SuffixAllocator::new(profile, params);
    let mut scratch = segment_buf();
    let mut intervals: Vec<(usize, f64)> = Vec::new();
    let t_s = params.slot_duration;

    let mut best_rate = f64::NEG_INFINITY;
    let mut best_nt = 1usize;
    let mut best_ete = 0.0f64;
    let mut best_idx = 0usize;

    for n_t in 1..n {
        let e_max = profile.energy(n_t - 1);
        let points = if e_max > 0.0 { ete_grid_points } else { 1 };
        let available = profile.cumulative_available(n_t);
        for i in 0..points {
            let e_te = if points == 1 {
                0.0
            } else {
                e_max * (i as f64 / (points - 1) as f64)
            };
            let s = (available - e_te) / t_s;
            allocator.suffix_intervals(n_t, e_te, &mut scratch, &mut intervals);
            let rate = intervals_rate(&intervals, s, n, params);
            if rate > best_rate {
                best_rate = rate;
                best_nt = n_t;
                best_ete = e_te;
                best_idx = i;
            }
        }
    }

    let e_max = profile.energy(best_nt - 1);
    if e_max > 0.0 {
        let step = e_max / (ete_grid_points - 1) as f64;
        let lo = (best_idx.saturating_sub(1) as f64 * step).max(0.0);
        let hi = (((best_idx + 1).min(ete_grid_points - 1)) as f64 * step).min(e_max);
        let available = profile.cumulative_available(best_nt);
        let mut eval = |e_te: f64| {
            let s = (available - e_te) / t_s;
            allocator.suffix_intervals(best_nt, e_te, &mut scratch, &mut intervals);
            intervals_rate(&intervals, s, n, params)
        };
        let (x, v) = golden_max(&mut eval, lo, hi, ETE_REFINE_REL_TOL * e_max);
        if v > best_rate {
            best_rate = v;
            best_ete = x;
        }
    }

    let data_alloc = allocator.suffix(best_nt, best_ete)?;
    Ok(PolicyOutcome {
        policy_id: "optimal".into(),
        n_train: best_nt,
        leftover_energy: best_ete,
        data_alloc,
        rate_bits_per_slot: best_rate,
        clamped: false,
    })
}

/// Smooth proxy for the block rate as a function of a *continuous*
/// training duration, plus its stationarity residual.
///
/// The proxy freezes the data powers at the whole-block water-filling
/// solution (or a single constant power) and models training energy as
/// `y · P̄_H` — the duration times the mean harvest power. Both
/// sub-optimal policies maximize this object; they differ only in the
/// power set plugged in.
pub struct RateApproxContext {
    /// `(slot_count, power)` intervals the proxy charges rate for.
    intervals: Vec<(usize, f64)>,
    /// Mean harvested power `P̄_H`.
    p_bar_h: f64,
    n: usize,
    params: ChannelParams,
}

impl RateApproxContext {
    /// Proxy over the profile's whole-block water-filling powers.
    pub fn from_profile(profile: &EnergyProfile, params: &ChannelParams) -> Self {
        let alloc = dwf_allocate(profile, params);
        Self {
            intervals: alloc.intervals().collect(),
            p_bar_h: profile.average_eh_rate(params),
            n: profile.len(),
            params: *params,
        }
    }

    /// Proxy for a constant-power profile: every slot at `p_h`.
    pub fn constant(p_h: f64, n: usize, params: &ChannelParams) -> Result<Self, PolicyError> {
        if n < 2 {
            return Err(PolicyError::ProfileTooShort(n));
        }
        if !p_h.is_finite() || p_h < 0.0 {
            return Err(PolicyError::InvalidArgument {
                name: "constant power",
                value: p_h,
            });
        }
        Ok(Self {
            intervals: vec![(n, p_h)],
            p_bar_h: p_h,
            n,
            params: *params,
        })
    }

    /// Proxy rate (bits/slot) at continuous training duration `y`:
    /// `(N-y)/N² · log₂e · Σ len·exp(1/K)E1(1/K)` with training energy
    /// `y·P̄_H` feeding every slot's `K`.
    pub fn objective(&self, y: f64) -> f64 {
        let s = y * self.p_bar_h;
        let mut sum = 0.0;
        for &(len, p) in &self.intervals {
            sum += len as f64 * slot_rate_term(k_factor(p, s, &self.params));
        }
        let n = self.n as f64;
        (n - y) / n * LOG2_E * sum / n
    }

    /// Stationarity residual of the proxy: negative while lengthening
    /// training still pays, positive once it no longer does. Equals
    /// `-N · d(objective)/dy` up to a positive factor, so its sign change
    /// brackets the proxy maximum.
    ///
    /// Zero-power intervals contribute nothing: their rate gain and their
    /// time cost cancel in the limit, and evaluating the formula naively at
    /// `P = 0` would keep only the cost half.
    pub fn stationarity_residual(&self, y: f64) -> f64 {
        let sh = self.params.sigma_h_sq;
        let s2 = self.params.sigma_sq;
        let s = y * self.p_bar_h;
        let time_cost = self.n as f64 / y - 1.0;
        let mut acc = 0.0;
        for &(len, p) in &self.intervals {
            if p == 0.0 {
                continue;
            }
            let k = k_factor(p, s, &self.params);
            let gain = slot_rate_term(k);
            let growth = sh * self.p_bar_h * y / (s2 + sh * p);
            let term =
                gain * (1.0 + time_cost * s2 / (sh * p * growth)) - time_cost / (1.0 + growth);
            acc += len as f64 * term;
        }
        acc
    }

    /// Continuous maximizer of the proxy in `[1, N-1]`, by bisecting the
    /// residual's sign change to a tolerance of `x_tol` on `1/y`. If the
    /// residual has no sign change over the bracket (tiny blocks, or a
    /// degenerate all-zero profile), the better endpoint is returned.
    pub fn continuous_root(&self, x_tol: f64) -> f64 {
        let mut lo = 1.0;
        let mut hi = (self.n - 1) as f64;
        if hi <= lo {
            return 1.0;
        }
        let f_lo = self.stationarity_residual(lo);
        let f_hi = self.stationarity_residual(hi);
        if !(f_lo < 0.0 && f_hi > 0.0) {
            return if self.objective(lo) >= self.objective(hi) {
                lo
            } else {
                hi
            };
        }
        for _ in 0..200 {
            if 1.0 / lo - 1.0 / hi <= x_tol {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if self.stationarity_residual(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Round a continuous maximizer to the integer neighbor with the
    /// larger proxy value (ties toward fewer training slots).
    pub fn discretize(&self, y: f64) -> usize {
        let max_nt = (self.n - 1) as f64;
        let lo = y.floor().clamp(1.0, max_nt);
        let hi = y.ceil().clamp(1.0, max_nt);
        if lo == hi || self.objective(lo) >= self.objective(hi) {
            lo as usize
        } else {
            hi as usize
        }
    }

    /// Large-`N` curvature constant `W` of the proxy: the asymptotic
    /// maximizer is `n_t = 2N / (1 + √(1+4NW))`.
    pub fn asymptotic_w(&self) -> Result<f64, PolicyError> {
        let sh = self.params.sigma_h_sq;
        let s2 = self.params.sigma_sq;
        if self.p_bar_h <= 0.0 {
            return Err(PolicyError::ModelDomain(
                "profile harvests no energy".into(),
            ));
        }
        let mut num = 0.0;
        let mut den = 0.0;
        for &(len, p) in &self.intervals {
            if p == 0.0 {
                continue;
            }
            // Kernel at the perfect-CSI operating point of this interval.
            let m = slot_rate_term(sh * p / s2);
            num += len as f64 * m;
            den += len as f64 * (s2 * s2 + s2 * sh * p) / (s2 * sh * self.p_bar_h)
                * (1.0 - s2 * m / (sh * p));
        }
        let w = num / den;
        if !w.is_finite() || w <= 0.0 {
            return Err(PolicyError::ModelDomain(format!(
                "curvature constant must be positive and finite, got {w}"
            )));
        }
        Ok(w)
    }
}

/// Pick the training period by maximizing the water-filled rate proxy;
/// execute it with zero carry-over.
pub fn suboptimal_dwf_rate(
    profile: &EnergyProfile,
    params: &ChannelParams,
) -> Result<PolicyOutcome, PolicyError> {
    suboptimal_dwf_rate_with(profile, params, DEFAULT_ROOT_TOL)
}

/// [`suboptimal_dwf_rate`] with an explicit root tolerance on `1/y`.
pub fn suboptimal_dwf_rate_with(
    profile: &EnergyProfile,
    params: &ChannelParams,
    root_tol: f64,
) -> Result<PolicyOutcome, PolicyError> {
    let n = profile.len();
    if n < 2 {
        return Err(PolicyError::ProfileTooShort(n));
    }
    let ctx = RateApproxContext::from_profile(profile, params);
    let n_t = ctx.discretize(ctx.continuous_root(root_tol));
    execute_zero_leftover(profile, params, n_t, "sub_dwf_rate".into(), false)
}

/// Proxy-optimal training period for a constant-power profile: `n` slots
/// all harvesting power `p_h`.
pub fn constant_rate_optimum(
    p_h: f64,
    n: usize,
    params: &ChannelParams,
) -> Result<usize, PolicyError> {
    constant_rate_optimum_with(p_h, n, params, DEFAULT_ROOT_TOL)
}

/// [`constant_rate_optimum`] with an explicit root tolerance on `1/y`.
pub fn constant_rate_optimum_with(
    p_h: f64,
    n: usize,
    params: &ChannelParams,
    root_tol: f64,
) -> Result<usize, PolicyError> {
    let ctx = RateApproxContext::constant(p_h, n, params)?;
    Ok(ctx.discretize(ctx.continuous_root(root_tol)))
}

/// Pick the training period as if the profile harvested its mean power in
/// every slot, then execute on the real profile with zero carry-over.
pub fn suboptimal_constant_rate(
    profile: &EnergyProfile,
    params: &ChannelParams,
) -> Result<PolicyOutcome, PolicyError> {
    suboptimal_constant_rate_with(profile, params, DEFAULT_ROOT_TOL)
}

/// [`suboptimal_constant_rate`] with an explicit root tolerance on `1/y`.
pub fn suboptimal_constant_rate_with(
    profile: &EnergyProfile,
    params: &ChannelParams,
    root_tol: f64,
) -> Result<PolicyOutcome, PolicyError> {
    let n = profile.len();
    if n < 2 {
        return Err(PolicyError::ProfileTooShort(n));
    }
    let n_t = constant_rate_optimum_with(profile.average_eh_rate(params), n, params, root_tol)?;
    execute_zero_leftover(profile, params, n_t, "sub_const_rate".into(), false)
}

/// Closed-form large-`N` training period from the water-filled rate proxy.
///
/// Returns `(n_t, alpha)` where `alpha = n_t / N` is the training fraction;
/// both are continuous (no rounding). Errors when the profile harvests no
/// energy, where the proxy has no interior maximum.
pub fn asymptotic_training_period(
    profile: &EnergyProfile,
    params: &ChannelParams,
) -> Result<(f64, f64), PolicyError> {
    let n = profile.len();
    if n < 2 {
        return Err(PolicyError::ProfileTooShort(n));
    }
    let ctx = RateApproxContext::from_profile(profile, params);
    let w = ctx.asymptotic_w()?;
    let n_f = n as f64;
    let root = (1.0 + 4.0 * n_f * w).sqrt();
    let alpha = 2.0 / (1.0 + root);
    Ok((n_f * alpha, alpha))
}

/// Non-adaptive training-period rules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FixedPolicy {
    /// Always train `v` slots.
    Slots(usize),
    /// Train a fixed fraction of the block, rounded to the nearest slot.
    Ratio(f64),
    /// Always train exactly one slot.
    OneSlot,
}

/// Execute a fixed training-period rule, clamping into `1..=N-1` when the
/// rule lands outside the block (the outcome records the clamp).
pub fn fixed_policy(
    profile: &EnergyProfile,
    params: &ChannelParams,
    mode: FixedPolicy,
) -> Result<PolicyOutcome, PolicyError> {
    let n = profile.len();
    if n < 2 {
        return Err(PolicyError::ProfileTooShort(n));
    }
    let (requested, policy_id) = match mode {
        FixedPolicy::Slots(v) => {
            if v < 1 {
                return Err(PolicyError::InvalidFixedSlots(v));
            }
            (v, format!("fixed_nt_{v}"))
        }
        FixedPolicy::Ratio(r) => {
            if !(r.is_finite() && r > 0.0 && r < 1.0) {
                return Err(PolicyError::InvalidFixedRatio(r));
            }
            ((r * n as f64).round() as usize, format!("fixed_ratio_{r}"))
        }
        FixedPolicy::OneSlot => (1, "one_slot".to_string()),
    };
    let n_t = requested.clamp(1, n - 1);
    execute_zero_leftover(profile, params, n_t, policy_id, n_t != requested)
}

/// Rate cap with causality removed: the whole energy budget is available
/// up front, split optimally between one training phase and `N-1` equal
/// data slots. Upper-bounds every causal policy on any profile with the
/// same total energy.
pub fn upper_bound_non_eh(
    total_energy: f64,
    n: usize,
    params: &ChannelParams,
) -> Result<f64, PolicyError> {
    if n < 2 {
        return Err(PolicyError::ProfileTooShort(n));
    }
    if !total_energy.is_finite() || total_energy < 0.0 {
        return Err(PolicyError::InvalidArgument {
            name: "total_energy",
            value: total_energy,
        });
    }
    if total_energy == 0.0 {
        return Ok(0.0);
    }
    let t_s = params.slot_duration;
    let data_slots = (n - 1) as f64;
    let mut eval = |rho: f64| {
        let s = rho * total_energy / t_s;
        let p = (1.0 - rho) * total_energy / (data_slots * t_s);
        data_slots / n as f64 * LOG2_E * slot_rate_term(k_factor(p, s, params))
    };
    let (_, v) = golden_max(&mut eval, 0.0, 1.0, RHO_TOL);
    Ok(v)
}

/// Rate cap with channel knowledge free: whole-block water-filling under
/// perfect CSI, no slots or energy spent training.
pub fn upper_bound_perfect_csi(profile: &EnergyProfile, params: &ChannelParams) -> f64 {
    let alloc = dwf_allocate(profile, params);
    perfect_csi_throughput(&alloc, params)
        .expect("whole-block allocation starts at slot 0")
        .bits_per_slot
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::RngSpec;

    fn params() -> ChannelParams {
        ChannelParams::default()
    }

    fn profile(e: &[f64]) -> EnergyProfile {
        EnergyProfile::new(e.to_vec()).unwrap()
    }

    #[test]
    fn optimal_two_slot_reference() {
        // [2,0]: the only choice is n_t = 1; the best carry-over is 1
        // (split the bank evenly between pilot and data).
        let out = optimal_exhaustive(&profile(&[2.0, 0.0]), &params(), DEFAULT_ETE_GRID).unwrap();
        assert_eq!(out.n_train, 1);
        assert!((out.leftover_energy - 1.0).abs() < 1e-5);
        assert!((out.rate_bits_per_slot - 0.189053456181989591).abs() < 1e-12);
        assert_eq!(out.policy_id, "optimal");
        assert!(!out.clamped);
        assert_eq!(out.data_alloc.start_slot, 1);
    }

    #[test]
    fn optimal_keeps_energy_for_data_after_big_first_arrival() {
        let out =
            optimal_exhaustive(&profile(&[50.0, 0.0, 0.0, 0.0]), &params(), DEFAULT_ETE_GRID)
                .unwrap();
        assert_eq!(out.n_train, 1);
        assert!(out.leftover_energy > 1.0, "kept {}", out.leftover_energy);
        assert!(out.rate_bits_per_slot > 0.0);
    }

    #[test]
    fn optimal_beats_every_grid_cell() {
        let prof = EnergyProfile::poisson(12, 1.0, RngSpec::new(30, 0)).unwrap();
        let p = params();
        let out = optimal_exhaustive(&prof, &p, 9).unwrap();
        for n_t in 1..prof.len() {
            let e_max = prof.energy(n_t - 1);
            for i in 0..9 {
                let e_te = if e_max > 0.0 {
                    e_max * (i as f64 / 8.0)
                } else {
                    0.0
                };
                let decision = training_split(&prof, n_t, e_te, &p).unwrap();
                let alloc = dwf_suffix(&prof, n_t, e_te, &p).unwrap();
                let intervals: Vec<_> = alloc.intervals().collect();
                let rate = intervals_rate(
                    &intervals,
                    decision.energy_sum / p.slot_duration,
                    prof.len(),
                    &p,
                );
                assert!(
                    out.rate_bits_per_slot >= rate,
                    "grid cell ({n_t}, {e_te}) beats the exhaustive search"
                );
            }
        }
    }

    #[test]
    fn optimal_validations() {
        assert!(matches!(
            optimal_exhaustive(&profile(&[1.0]), &params(), 65),
            Err(PolicyError::ProfileTooShort(1))
        ));
        assert!(matches!(
            optimal_exhaustive(&profile(&[1.0, 1.0]), &params(), 1),
            Err(PolicyError::InvalidGrid(1))
        ));
    }

    #[test]
    fn proxy_collapses_on_constant_profiles() {
        // On a constant profile the water-filled proxy and the constant
        // proxy are the same object, so the two sub-optimal policies must
        // agree exactly — and with unit arrivals the optimizer is known.
        let p = params();
        for (n, expect) in [(10usize, 3usize), (100, 10)] {
            let prof = EnergyProfile::constant(n, 1.0).unwrap();
            let a = suboptimal_dwf_rate(&prof, &p).unwrap();
            let b = suboptimal_constant_rate(&prof, &p).unwrap();
            assert_eq!(a.n_train, expect, "block of {n}");
            assert_eq!(b.n_train, expect);
            assert_eq!(a.rate_bits_per_slot, b.rate_bits_per_slot);
            assert_eq!(constant_rate_optimum(1.0, n, &p).unwrap(), expect);
        }
    }

    #[test]
    fn proxy_objective_is_unimodal_over_integers() {
        let p = params();
        for stream in 0..20 {
            let prof = EnergyProfile::poisson(100, 1.0, RngSpec::new(77, stream)).unwrap();
            let ctx = RateApproxContext::from_profile(&prof, &p);
            let values: Vec<f64> = (1..prof.len()).map(|y| ctx.objective(y as f64)).collect();
            let vmax = values.iter().cloned().fold(f64::MIN, f64::max);
            let argmax = values
                .iter()
                .position(|&v| v == vmax)
                .expect("max exists");
            let slack = 1e-9 * vmax.abs().max(1e-300);
            for i in 0..argmax {
                assert!(
                    values[i] <= values[i + 1] + slack,
                    "not rising before the peak at index {i} (stream {stream})"
                );
            }
            for i in argmax..values.len() - 1 {
                assert!(
                    values[i + 1] <= values[i] + slack,
                    "not falling after the peak at index {i} (stream {stream})"
                );
            }
        }
    }

    #[test]
    fn residual_brackets_the_proxy_peak() {
        let p = params();
        let prof = EnergyProfile::poisson(200, 1.0, RngSpec::new(13, 5)).unwrap();
        let ctx = RateApproxContext::from_profile(&prof, &p);
        let root = ctx.continuous_root(DEFAULT_ROOT_TOL);
        assert!(root >= 1.0 && root <= 199.0);
        // The residual is negative left of the root, positive right of it.
        assert!(ctx.stationarity_residual((root - 1.0).max(1.0)) < 0.0);
        assert!(ctx.stationarity_residual((root + 1.0).min(199.0)) > 0.0);
        // Discretization lands on the integer argmax of the proxy.
        let n_t = ctx.discretize(root);
        let best_int = (1..200usize)
            .max_by(|&a, &b| {
                ctx.objective(a as f64)
                    .total_cmp(&ctx.objective(b as f64))
            })
            .unwrap();
        assert_eq!(n_t, best_int);
    }

    #[test]
    fn root_tolerance_does_not_move_the_integer_answer() {
        let p = params();
        let loose = constant_rate_optimum_with(1.0, 200, &p, 1e-4).unwrap();
        let tight = constant_rate_optimum_with(1.0, 200, &p, 1e-12).unwrap();
        assert_eq!(loose, tight);
    }

    #[test]
    fn asymptotic_constant_unit_power_reference() {
        let p = params();
        let ctx = RateApproxContext::constant(1.0, 1000, &p).unwrap();
        let w = ctx.asymptotic_w().unwrap();
        assert!((w - 0.738688796579441354).abs() < 1e-12, "w = {w}");

        let prof = EnergyProfile::constant(1000, 1.0).unwrap();
        let (n_t, alpha) = asymptotic_training_period(&prof, &p).unwrap();
        assert!((n_t - 36.1227).abs() < 5e-4, "n_t = {n_t}");
        assert!((alpha - n_t / 1000.0).abs() < 1e-12);
    }

    #[test]
    fn asymptotic_converges_to_the_bisection_root() {
        let p = params();
        let mut prev_ratio = f64::INFINITY;
        let mut prev_alpha = f64::INFINITY;
        let mut prev_nt = 0.0;
        for n in [1_000usize, 10_000] {
            let prof = EnergyProfile::constant(n, 1.0).unwrap();
            let ctx = RateApproxContext::constant(1.0, n, &p).unwrap();
            let root = ctx.continuous_root(DEFAULT_ROOT_TOL);
            let (n_t, alpha) = asymptotic_training_period(&prof, &p).unwrap();
            let ratio = n_t / root;
            assert!(ratio > 1.0 && ratio < 1.03, "ratio {ratio} at n = {n}");
            assert!(ratio < prev_ratio, "ratio must shrink with n");
            assert!(alpha < prev_alpha, "training fraction must shrink");
            assert!(n_t > prev_nt, "training period must still grow");
            prev_ratio = ratio;
            prev_alpha = alpha;
            prev_nt = n_t;
        }
    }

    #[test]
    fn fixed_policies_clamp_and_label() {
        let p = params();
        let prof = EnergyProfile::poisson(10, 1.0, RngSpec::new(2, 0)).unwrap();

        let big = fixed_policy(&prof, &p, FixedPolicy::Slots(30)).unwrap();
        assert_eq!(big.n_train, 9);
        assert!(big.clamped);
        assert_eq!(big.policy_id, "fixed_nt_30");

        let ratio = fixed_policy(&prof, &p, FixedPolicy::Ratio(0.04)).unwrap();
        assert_eq!(ratio.n_train, 1); // 0.4 rounds to 0, clamped up
        assert!(ratio.clamped);
        assert_eq!(ratio.policy_id, "fixed_ratio_0.04");

        let one = fixed_policy(&prof, &p, FixedPolicy::OneSlot).unwrap();
        assert_eq!(one.n_train, 1);
        assert!(!one.clamped);
        assert_eq!(one.policy_id, "one_slot");

        assert!(matches!(
            fixed_policy(&prof, &p, FixedPolicy::Slots(0)),
            Err(PolicyError::InvalidFixedSlots(0))
        ));
        assert!(matches!(
            fixed_policy(&prof, &p, FixedPolicy::Ratio(1.0)),
            Err(PolicyError::InvalidFixedRatio(_))
        ));
    }

    #[test]
    fn fixed_ratio_reference_points() {
        let p = params();
        let prof50 = EnergyProfile::constant(50, 1.0).unwrap();
        let r50 = fixed_policy(&prof50, &p, FixedPolicy::Ratio(0.04)).unwrap();
        assert_eq!(r50.n_train, 2);
        assert!(!r50.clamped);

        let prof1250 = EnergyProfile::constant(1250, 1.0).unwrap();
        let r1250 = fixed_policy(&prof1250, &p, FixedPolicy::Ratio(0.04)).unwrap();
        assert_eq!(r1250.n_train, 50);
        assert!(!r1250.clamped);
    }

    #[test]
    fn zero_energy_profiles_degrade_gracefully() {
        let p = params();
        let prof = EnergyProfile::constant(5, 0.0).unwrap();
        for out in [
            optimal_exhaustive(&prof, &p, 65).unwrap(),
            suboptimal_dwf_rate(&prof, &p).unwrap(),
            suboptimal_constant_rate(&prof, &p).unwrap(),
        ] {
            assert_eq!(out.n_train, 1);
            assert_eq!(out.leftover_energy, 0.0);
            assert_eq!(out.rate_bits_per_slot, 0.0);
        }
        assert!(matches!(
            asymptotic_training_period(&prof, &p),
            Err(PolicyError::ModelDomain(_))
        ));
        assert_eq!(upper_bound_perfect_csi(&prof, &p), 0.0);
        assert_eq!(upper_bound_non_eh(0.0, 5, &p).unwrap(), 0.0);
    }

    #[test]
    fn non_eh_bound_grows_without_limit() {
        let p = params();
        let mut prev = 0.0;
        for e in [1.0, 1e2, 1e4, 1e6] {
            let v = upper_bound_non_eh(e, 100, &p).unwrap();
            assert!(v > prev, "bound must grow with the energy budget");
            prev = v;
        }
        assert!(matches!(
            upper_bound_non_eh(-1.0, 100, &p),
            Err(PolicyError::InvalidArgument { .. })
        ));
        assert!(matches!(
            upper_bound_non_eh(1.0, 1, &p),
            Err(PolicyError::ProfileTooShort(1))
        ));
    }

    #[test]
    fn dominance_chain_on_random_profiles() {
        let p = params();
        for stream in 0..10 {
            let prof = EnergyProfile::poisson(50, 1.0, RngSpec::new(99, stream)).unwrap();
            let opt = optimal_exhaustive(&prof, &p, 17).unwrap();
            let challengers = [
                suboptimal_dwf_rate(&prof, &p).unwrap(),
                suboptimal_constant_rate(&prof, &p).unwrap(),
                fixed_policy(&prof, &p, FixedPolicy::Slots(30)).unwrap(),
                fixed_policy(&prof, &p, FixedPolicy::Ratio(0.04)).unwrap(),
                fixed_policy(&prof, &p, FixedPolicy::OneSlot).unwrap(),
            ];
            for c in &challengers {
                assert!(
                    opt.rate_bits_per_slot >= c.rate_bits_per_slot,
                    "{} beat the exhaustive search on stream {stream}",
                    c.policy_id
                );
            }
            let csi = upper_bound_perfect_csi(&prof, &p);
            let non_eh = upper_bound_non_eh(prof.total_energy(), prof.len(), &p).unwrap();
            assert!(csi >= opt.rate_bits_per_slot);
            assert!(non_eh >= opt.rate_bits_per_slot);
        }
    }
}
