//! Directional water-filling over a slotted energy-harvest profile.
//!
//! Energy can be buffered forward in time but never borrowed from the
//! future, so the rate-optimal data-phase powers form the lower convex hull
//! of the cumulative-arrival staircase: each allocation interval spends, at
//! a constant power, exactly the energy that arrived over it, and interval
//! powers strictly increase. The hull is built greedily — from the current
//! anchor slot, extend to the candidate slot minimizing the average energy
//! per slot, breaking ties toward the farthest slot so equal-average runs
//! merge into one interval.
//!
//! Comparisons between candidate averages are done by cross-multiplication
//! (`num_a·den_b ≤ num_b·den_a`), which is *exact* for integer-valued
//! arrivals of realistic size: the products stay well inside the 2^53
//! integer range of f64. That exactness is what lets the incremental
//! update below reproduce a from-scratch recomputation bit for bit.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::energy::{ChannelParams, EnergyProfile};

#[derive(Debug, Error)]
pub enum DwfError {
    #[error("start slot {start} out of range for a profile of {n} slots")]
    StartOutOfRange { start: usize, n: usize },
    #[error("carried-over energy must be finite and non-negative, got {0}")]
    InvalidCarry(f64),
    #[error("training period {n_t} outside the valid range 1..={max}")]
    TrainingPeriodOutOfRange { n_t: usize, max: usize },
    #[error("final-slot leftover {e_te} outside [0, {max}]")]
    LeftoverOutOfRange { e_te: f64, max: f64 },
    #[error("base allocation inconsistent with profile: {0}")]
    BaseMismatch(String),
}

/// Piecewise-constant power schedule over slots `start_slot+1 ..= N`.
///
/// Interval `i` covers slots `breakpoints[i-1]+1 ..= breakpoints[i]`
/// (with `breakpoints[-1]` read as `start_slot`) at power `powers[i]`.
/// Powers are strictly increasing and the schedule spends exactly the
/// energy that arrives over its span.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerAllocation {
    /// Last slot (1-based) of each constant-power interval; ends at `N`.
    pub breakpoints: Vec<usize>,
    /// Transmit power held over each interval.
    pub powers: Vec<f64>,
    /// Slots `1..=start_slot` are outside this allocation.
    pub start_slot: usize,
}

impl PowerAllocation {
    /// Number of slots covered.
    pub fn n_slots(&self) -> usize {
        self.last_slot() - self.start_slot
    }

    /// Final covered slot (the block length `N` for full allocations).
    pub fn last_slot(&self) -> usize {
        *self.breakpoints.last().unwrap_or(&self.start_slot)
    }

    /// `(length_in_slots, power)` per interval, in time order.
    pub fn intervals(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        let starts = std::iter::once(self.start_slot).chain(self.breakpoints.iter().copied());
        self.breakpoints
            .iter()
            .zip(starts)
            .zip(self.powers.iter())
            .map(|((&end, start), &p)| (end - start, p))
    }

    /// Expand to one power per covered slot.
    pub fn per_slot(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_slots());
        for (len, p) in self.intervals() {
            out.extend(std::iter::repeat(p).take(len));
        }
        out
    }

    /// Total energy the schedule spends.
    pub fn energy_spent(&self, params: &ChannelParams) -> f64 {
        self.intervals()
            .map(|(len, p)| len as f64 * p * params.slot_duration)
            .sum()
    }
}

/// Powers for the training phase of a block: slots `1..=n_train`.
///
/// Every training slot drains the energy banked at its start except the
/// last, which leaves `leftover_energy` in the battery for the data phase.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainingDecision {
    pub n_train: usize,
    /// Power per training slot, in slot order.
    pub powers: Vec<f64>,
    /// Energy carried past the end of training.
    pub leftover_energy: f64,
    /// Total energy spent on training (drives the estimator quality).
    pub energy_sum: f64,
}

/// One constant-power hull segment in raw energy terms. `num/den` is the
/// average energy per slot; keeping numerator and denominator separate
/// allows exact cross-multiplied comparisons.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Segment {
    /// Slot the segment's span starts after.
    anchor: usize,
    /// Effective cumulative level at the anchor (`cum[anchor]` less any
    /// carried-in energy).
    anchor_val: f64,
    /// Last slot of the span.
    end: usize,
    num: f64,
    den: f64,
}

/// From `anchor`, pick the span end minimizing average energy per slot.
/// Ties go to the farthest end so equal-average spans coalesce.
fn greedy_scan(cum: &[f64], anchor: usize, anchor_val: f64, n: usize) -> Segment {
    let mut best = Segment {
        anchor,
        anchor_val,
        end: anchor + 1,
        num: cum[anchor + 1] - anchor_val,
        den: 1.0,
    };
    for end in anchor + 2..=n {
        let num = cum[end] - anchor_val;
        let den = (end - anchor) as f64;
        if num * best.den <= best.num * den {
            best.end = end;
            best.num = num;
            best.den = den;
        }
    }
    best
}

/// Append a segment, merging backwards while it does not strictly increase
/// the average. With exact comparisons the merge never fires (the greedy
/// scan already guarantees strict increase); it is kept as a guard for
/// non-integer arrivals where rounding could produce a tie.
fn push_segment(segments: &mut Vec<Segment>, mut seg: Segment, cum: &[f64]) {
    while let Some(last) = segments.last() {
        if seg.num * last.den <= last.num * seg.den {
            seg = Segment {
                anchor: last.anchor,
                anchor_val: last.anchor_val,
                end: seg.end,
                num: cum[seg.end] - last.anchor_val,
                den: (seg.end - last.anchor) as f64,
            };
            segments.pop();
        } else {
            break;
        }
    }
    segments.push(seg);
}

/// Full greedy hull of slots `start+1 ..= n` with `extra` carried-in energy.
fn full_hull(cum: &[f64], start: usize, extra: f64, n: usize) -> Vec<Segment> {
    let mut segments = Vec::new();
    let mut anchor = start;
    let mut anchor_val = cum[start] - extra;
    while anchor < n {
        let seg = greedy_scan(cum, anchor, anchor_val, n);
        anchor = seg.end;
        anchor_val = cum[anchor];
        push_segment(&mut segments, seg, cum);
    }
    segments
}

fn segments_to_allocation(
    segments: &[Segment],
    start_slot: usize,
    params: &ChannelParams,
) -> PowerAllocation {
    PowerAllocation {
        breakpoints: segments.iter().map(|s| s.end).collect(),
        powers: segments
            .iter()
            .map(|s| s.num / s.den / params.slot_duration)
            .collect(),
        start_slot,
    }
}

/// Water-fill the whole block (slots `1..=N`, nothing carried in).
pub fn dwf_allocate(profile: &EnergyProfile, params: &ChannelParams) -> PowerAllocation {
    let cum = profile.cumulative_sums();
    let segments = full_hull(cum, 0, 0.0, profile.len());
    segments_to_allocation(&segments, 0, params)
}

/// Water-fill the suffix `start_slot+1 ..= N` from scratch, with
/// `extra_energy` already banked when the suffix begins.
pub fn dwf_suffix(
    profile: &EnergyProfile,
    start_slot: usize,
    extra_energy: f64,
    params: &ChannelParams,
) -> Result<PowerAllocation, DwfError> {
    let n = profile.len();
    if start_slot >= n {
        return Err(DwfError::StartOutOfRange {
            start: start_slot,
            n,
        });
    }
    if !extra_energy.is_finite() || extra_energy < 0.0 {
        return Err(DwfError::InvalidCarry(extra_energy));
    }
    let segments = full_hull(profile.cumulative_sums(), start_slot, extra_energy, n);
    Ok(segments_to_allocation(&segments, start_slot, params))
}

/// Reusable suffix water-filler that amortizes a whole-block hull.
///
/// The key fact: once the greedy construction's anchor lands on a vertex of
/// the whole-block hull with no pending carried energy, every later segment
/// coincides with the base hull's — the greedy state `(anchor, cum[anchor])`
/// is exactly the state the base construction had at that vertex. The
/// suffix routine therefore scans only until it reaches a base vertex and
/// then splices the stored tail, which for the common `extra = 0` queries
/// of a schedule search collapses to a single lookup.
pub struct SuffixAllocator<'a> {
    profile: &'a EnergyProfile,
    params: ChannelParams,
    base_segments: Vec<Segment>,
    /// `vertex_tail[slot]` = index into `base_segments` of the first
    /// segment strictly after `slot`, when `slot` is a base hull vertex.
    vertex_tail: Vec<Option<u32>>,
}

impl<'a> SuffixAllocator<'a> {
    /// Build the base hull for `profile` and index its vertices.
    pub fn new(profile: &'a EnergyProfile, params: &ChannelParams) -> Self {
        let segments = full_hull(profile.cumulative_sums(), 0, 0.0, profile.len());
        Self::from_segments(profile, *params, segments)
    }

    fn from_segments(
        profile: &'a EnergyProfile,
        params: ChannelParams,
        base_segments: Vec<Segment>,
    ) -> Self {
        let mut vertex_tail = vec![None; profile.len() + 1];
        vertex_tail[0] = Some(0);
        for (i, seg) in base_segments.iter().enumerate() {
            vertex_tail[seg.end] = Some(i as u32 + 1);
        }
        Self {
            profile,
            params,
            base_segments,
            vertex_tail,
        }
    }

    /// Adopt an externally supplied whole-block allocation as the base.
    /// Verifies it against the profile (span, interval energy balance)
    /// before trusting it.
    pub fn from_base(
        profile: &'a EnergyProfile,
        params: &ChannelParams,
        base: &PowerAllocation,
    ) -> Result<Self, DwfError> {
        let n = profile.len();
        let cum = profile.cumulative_sums();
        if base.start_slot != 0 {
            return Err(DwfError::BaseMismatch(format!(
                "base must start at slot 0, got {}",
                base.start_slot
            )));
        }
        if base.last_slot() != n || base.breakpoints.len() != base.powers.len() {
            return Err(DwfError::BaseMismatch(format!(
                "base covers slots 1..={} but the profile has {} slots",
                base.last_slot(),
                n
            )));
        }
        let mut segments = Vec::with_capacity(base.breakpoints.len());
        let mut anchor = 0usize;
        for (&end, &p) in base.breakpoints.iter().zip(&base.powers) {
            if end <= anchor || end > n {
                return Err(DwfError::BaseMismatch(format!(
                    "breakpoints not strictly increasing at slot {end}"
                )));
            }
            let num = cum[end] - cum[anchor];
            let den = (end - anchor) as f64;
            let implied = num / den / params.slot_duration;
            let tol = 1e-9 * implied.abs().max(1.0);
            if (implied - p).abs() > tol {
                return Err(DwfError::BaseMismatch(format!(
                    "interval ending at slot {end} declares power {p} but the \
                     arrivals over it imply {implied}"
                )));
            }
            segments.push(Segment {
                anchor,
                anchor_val: cum[anchor],
                end,
                num,
                den,
            });
            anchor = end;
        }
        Ok(Self::from_segments(profile, *params, segments))
    }

    pub fn base(&self) -> PowerAllocation {
        segments_to_allocation(&self.base_segments, 0, &self.params)
    }

    pub fn profile(&self) -> &EnergyProfile {
        self.profile
    }

    /// Suffix hull as raw segments, written into `out` (no allocation on
    /// the hot path). Scans greedily until the anchor state matches a base
    /// vertex, then splices the stored tail.
    fn suffix_segments(&self, start_slot: usize, extra_energy: f64, out: &mut Vec<Segment>) {
        let cum = self.profile.cumulative_sums();
        let n = self.profile.len();
        out.clear();
        let mut anchor = start_slot;
        let mut anchor_val = cum[start_slot] - extra_energy;
        while anchor < n {
            if anchor_val == cum[anchor] {
                if let Some(tail) = self.vertex_tail[anchor] {
                    for seg in &self.base_segments[tail as usize..] {
                        push_segment(out, *seg, cum);
                    }
                    return;
                }
            }
            let seg = greedy_scan(cum, anchor, anchor_val, n);
            anchor = seg.end;
            anchor_val = cum[anchor];
            push_segment(out, seg, cum);
        }
    }

    /// Suffix water-filling; bit-identical to [`dwf_suffix`] on the same
    /// inputs.
    pub fn suffix(
        &self,
        start_slot: usize,
        extra_energy: f64,
    ) -> Result<PowerAllocation, DwfError> {
        let n = self.profile.len();
        if start_slot >= n {
            return Err(DwfError::StartOutOfRange {
                start: start_slot,
                n,
            });
        }
        if !extra_energy.is_finite() || extra_energy < 0.0 {
            return Err(DwfError::InvalidCarry(extra_energy));
        }
        let mut segments = Vec::new();
        self.suffix_segments(start_slot, extra_energy, &mut segments);
        Ok(segments_to_allocation(&segments, start_slot, &self.params))
    }

    /// Rate-model view of a suffix: `(length, power)` intervals appended to
    /// `out`, avoiding `PowerAllocation` construction in search loops.
    pub(crate) fn suffix_intervals(
        &self,
        start_slot: usize,
        extra_energy: f64,
        scratch: &mut Vec<Segment>,
        out: &mut Vec<(usize, f64)>,
    ) {
        self.suffix_segments(start_slot, extra_energy, scratch);
        out.clear();
        let mut prev = start_slot;
        for seg in scratch.iter() {
            out.push((
                seg.end - prev,
                seg.num / seg.den / self.params.slot_duration,
            ));
            prev = seg.end;
        }
    }
}

/// Scratch buffer type for [`SuffixAllocator::suffix_intervals`].
pub(crate) type SegmentBuf = Vec<Segment>;

pub(crate) fn segment_buf() -> SegmentBuf {
    Vec::new()
}

/// Recompute the allocation after the first `n_t` slots are reassigned to
/// training (all arrivals up to slot `n_t` consumed). `base` must be the
/// whole-block water-filling of `profile`; only the leading segments are
/// rebuilt, the rest are spliced from `base`. Equals
/// `dwf_suffix(profile, n_t, 0.0, params)` exactly.
pub fn incremental_update(
    base: &PowerAllocation,
    profile: &EnergyProfile,
    n_t: usize,
    params: &ChannelParams,
) -> Result<PowerAllocation, DwfError> {
    let allocator = SuffixAllocator::from_base(profile, params, base)?;
    allocator.suffix(n_t, 0.0)
}

/// Split the first `n_t` slots' energy between channel training and a
/// final-slot carry-over of `e_te`.
///
/// Training slot `j < n_t` spends the packet banked at its start
/// (`E_{j-1}`); slot `n_t` spends `E_{n_t-1} - e_te`. The returned
/// `energy_sum` is `cumulative_available(n_t) - e_te`, the exact energy the
/// channel estimator benefits from.
pub fn training_split(
    profile: &EnergyProfile,
    n_t: usize,
    e_te: f64,
    params: &ChannelParams,
) -> Result<TrainingDecision, DwfError> {
    let n = profile.len();
    if n_t < 1 || n_t >= n {
        return Err(DwfError::TrainingPeriodOutOfRange {
            n_t,
            max: n.saturating_sub(1),
        });
    }
    let last_arrival = profile.energy(n_t - 1);
    if !e_te.is_finite() || e_te < 0.0 || e_te > last_arrival {
        return Err(DwfError::LeftoverOutOfRange {
            e_te,
            max: last_arrival,
        });
    }
    let t_s = params.slot_duration;
    let mut powers = Vec::with_capacity(n_t);
    for j in 0..n_t - 1 {
        powers.push(profile.energy(j) / t_s);
    }
    powers.push((last_arrival - e_te) / t_s);
    Ok(TrainingDecision {
        n_train: n_t,
        powers,
        leftover_energy: e_te,
        energy_sum: profile.cumulative_available(n_t) - e_te,
    })
}
