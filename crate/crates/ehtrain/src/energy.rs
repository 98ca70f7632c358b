//! Harvest profiles, link parameters, and energy-neutrality checking.
//!
//! Time is slotted: slot `l ∈ {1..N}` has duration `slot_duration`, and the
//! packet of energy `E_{l-1}` harvested *during* slot `l-1` becomes usable at
//! the start of slot `l` (`E_0` is banked before transmission begins). A
//! power schedule is *energy neutral* when every prefix of it spends no more
//! than what has arrived, and the full horizon spends everything.

use std::fmt::Write as _;
use std::path::Path;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EnergyError {
    #[error("profile must contain at least {min} slot(s), got {got}")]
    TooShort { min: usize, got: usize },
    #[error("energy at slot index {index} must be finite and non-negative, got {value}")]
    InvalidEnergy { index: usize, value: f64 },
    #[error("power at slot index {index} must be finite and non-negative, got {value}")]
    InvalidPower { index: usize, value: f64 },
    #[error("power schedule has {powers} entries but the profile has {slots} slots")]
    LengthMismatch { powers: usize, slots: usize },
    #[error("channel parameter {name} must be finite and positive, got {value}")]
    InvalidParam { name: &'static str, value: f64 },
    #[error("mean arrival rate must lie in (0, {max}], got {got}")]
    InvalidArrivalRate { max: f64, got: f64 },
    #[error("failed to read profile file: {0}")]
    Io(#[from] std::io::Error),
    #[error("profile parse error: {0}")]
    Parse(String),
}

/// Link-level constants shared by every model in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Rayleigh channel gain variance `σ_h²`.
    pub sigma_h_sq: f64,
    /// Additive noise variance `σ²` per symbol.
    pub sigma_sq: f64,
    /// Slot duration `T_s` (seconds per slot); converts energy to power.
    pub slot_duration: f64,
}

impl Default for ChannelParams {
    /// Unit channel: `σ_h² = σ² = T_s = 1`.
    fn default() -> Self {
        Self {
            sigma_h_sq: 1.0,
            sigma_sq: 1.0,
            slot_duration: 1.0,
        }
    }
}

impl ChannelParams {
    pub fn new(sigma_h_sq: f64, sigma_sq: f64, slot_duration: f64) -> Result<Self, EnergyError> {
        let check = |name: &'static str, value: f64| {
            if value.is_finite() && value > 0.0 {
                Ok(value)
            } else {
                Err(EnergyError::InvalidParam { name, value })
            }
        };
        Ok(Self {
            sigma_h_sq: check("sigma_h_sq", sigma_h_sq)?,
            sigma_sq: check("sigma_sq", sigma_sq)?,
            slot_duration: check("slot_duration", slot_duration)?,
        })
    }
}

/// Seed plus stream index for a counter-based generator.
///
/// Every random quantity in the crate is drawn from `ChaCha8` keyed by a
/// `(seed, stream_index)` pair, so independent substreams can be handed to
/// parallel workers without any coordination: trial `t` of a sweep always
/// sees the same bytes no matter how many threads run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngSpec {
    pub seed: u64,
    pub stream_index: u64,
}

impl RngSpec {
    pub fn new(seed: u64, stream_index: u64) -> Self {
        Self { seed, stream_index }
    }

    /// Instantiate the generator positioned at the start of the stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_index);
        rng
    }
}

/// Uniform draw in `[0, 1)` with 53 random bits.
pub(crate) fn uniform_f64(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Largest mean for which the sequential-search Poisson sampler below is
/// numerically sound (`e^-λ` must not underflow).
const MAX_ARRIVAL_RATE: f64 = 500.0;

/// Poisson draw by inversion (sequential CDF search). Exact for the means
/// used here; cost is `O(λ)` per draw.
fn poisson_draw(rng: &mut ChaCha8Rng, lambda: f64) -> f64 {
    let u = uniform_f64(rng);
    let mut k = 0u64;
    let mut pmf = (-lambda).exp();
    let mut cdf = pmf;
    while u > cdf && pmf > 0.0 {
        k += 1;
        pmf *= lambda / k as f64;
        cdf += pmf;
    }
    k as f64
}

/// Result of an energy-neutrality check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NeutralityCheck {
    Satisfied,
    /// Smallest 1-based slot count `l` whose prefix consumes more energy
    /// than has arrived by the start of slot `l`.
    ViolatedAt { slot: usize },
}

impl NeutralityCheck {
    pub fn is_satisfied(&self) -> bool {
        matches!(self, NeutralityCheck::Satisfied)
    }
}

/// Immutable record of the energy harvested ahead of each slot.
///
/// `energies[k]` is the packet `E_k` that becomes available at the start of
/// slot `k+1`; prefix sums are cached so feasibility checks and allocation
/// routines run in constant time per query.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyProfile {
    energies: Vec<f64>,
    /// `cumulative[l] = E_0 + … + E_{l-1}`; length `N + 1`.
    cumulative: Vec<f64>,
}

impl EnergyProfile {
    /// Validate and wrap an arrival sequence (at least one slot, all
    /// entries finite and non-negative).
    pub fn new(energies: Vec<f64>) -> Result<Self, EnergyError> {
        if energies.is_empty() {
            return Err(EnergyError::TooShort {
                min: 1,
                got: energies.len(),
            });
        }
        for (index, &value) in energies.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(EnergyError::InvalidEnergy { index, value });
            }
        }
        let mut cumulative = Vec::with_capacity(energies.len() + 1);
        let mut acc = 0.0;
        cumulative.push(acc);
        for &e in &energies {
            acc += e;
            cumulative.push(acc);
        }
        Ok(Self {
            energies,
            cumulative,
        })
    }

    /// I.i.d. Poisson arrivals with mean `lambda_e`, deterministic in the
    /// `(seed, stream_index)` pair. Needs `n ≥ 2` so that at least one data
    /// slot exists after training.
    pub fn poisson(n: usize, lambda_e: f64, spec: RngSpec) -> Result<Self, EnergyError> {
        if n < 2 {
            return Err(EnergyError::TooShort { min: 2, got: n });
        }
        if !(lambda_e.is_finite() && lambda_e > 0.0 && lambda_e <= MAX_ARRIVAL_RATE) {
            return Err(EnergyError::InvalidArrivalRate {
                max: MAX_ARRIVAL_RATE,
                got: lambda_e,
            });
        }
        let mut rng = spec.rng();
        let energies = (0..n).map(|_| poisson_draw(&mut rng, lambda_e)).collect();
        Self::new(energies)
    }

    /// Constant arrivals: every slot receives `rate` units of energy.
    pub fn constant(n: usize, rate: f64) -> Result<Self, EnergyError> {
        if n < 2 {
            return Err(EnergyError::TooShort { min: 2, got: n });
        }
        if !rate.is_finite() || rate < 0.0 {
            return Err(EnergyError::InvalidEnergy {
                index: 0,
                value: rate,
            });
        }
        Self::new(vec![rate; n])
    }

    /// Number of slots `N`.
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// The packet `E_k` released at the start of slot `k+1`.
    pub fn energy(&self, k: usize) -> f64 {
        self.energies[k]
    }

    /// Prefix sums `[0, E_0, E_0+E_1, …]`; index `l` is the energy available
    /// to the first `l` slots.
    pub fn cumulative_sums(&self) -> &[f64] {
        &self.cumulative
    }

    /// Total energy available to the first `l` slots. Panics if `l > N`.
    pub fn cumulative_available(&self, l: usize) -> f64 {
        assert!(
            l <= self.energies.len(),
            "prefix length {l} exceeds profile length {}",
            self.energies.len()
        );
        self.cumulative[l]
    }

    pub fn total_energy(&self) -> f64 {
        self.cumulative[self.energies.len()]
    }

    /// Mean harvested power `P̄_H = (Σ E_k) / (N·T_s)`.
    pub fn average_eh_rate(&self, params: &ChannelParams) -> f64 {
        self.total_energy() / (self.energies.len() as f64 * params.slot_duration)
    }

    /// Check a per-slot power schedule against causality and exact total
    /// spend. `powers[l-1]` is the transmit power held during slot `l`.
    ///
    /// Comparisons use an absolute slack of `1e-9 · max(1, total energy)`
    /// because interval-based allocators reconstruct per-slot powers with
    /// one extra rounding step; genuine violations are orders of magnitude
    /// larger. Reports the smallest violating prefix. The terminal
    /// exhaustion requirement is checked as `|spent - arrived| ≤ slack`.
    pub fn check_energy_neutral(
        &self,
        powers: &[f64],
        params: &ChannelParams,
    ) -> Result<NeutralityCheck, EnergyError> {
        if powers.len() != self.energies.len() {
            return Err(EnergyError::LengthMismatch {
                powers: powers.len(),
                slots: self.energies.len(),
            });
        }
        for (index, &value) in powers.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(EnergyError::InvalidPower { index, value });
            }
        }
        let slack = 1e-9 * self.total_energy().max(1.0);
        let mut spent = 0.0;
        for (i, &p) in powers.iter().enumerate() {
            spent += p * params.slot_duration;
            if spent > self.cumulative[i + 1] + slack {
                return Ok(NeutralityCheck::ViolatedAt { slot: i + 1 });
            }
        }
        if (spent - self.total_energy()).abs() > slack {
            return Ok(NeutralityCheck::ViolatedAt {
                slot: self.energies.len(),
            });
        }
        Ok(NeutralityCheck::Satisfied)
    }

    /// Parse a profile from a string holding either JSON
    /// (`{"energies": [...]}`) or CSV with a single `energy` column. The
    /// format is sniffed from the first non-whitespace byte.
    pub fn from_str_auto(text: &str) -> Result<Self, EnergyError> {
        let trimmed = text.trim_start();
        if trimmed.starts_with('{') {
            Self::from_json_str(trimmed)
        } else {
            Self::from_csv_str(text)
        }
    }

    /// Load a profile file (JSON or CSV, sniffed by content).
    pub fn load(path: &Path) -> Result<Self, EnergyError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_str_auto(&text)
    }

    pub fn from_json_str(text: &str) -> Result<Self, EnergyError> {
        #[derive(Deserialize)]
        struct Wire {
            energies: Vec<f64>,
        }
        let wire: Wire =
            serde_json::from_str(text).map_err(|e| EnergyError::Parse(e.to_string()))?;
        Self::new(wire.energies)
    }

    pub fn from_csv_str(text: &str) -> Result<Self, EnergyError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| EnergyError::Parse("empty CSV input".into()))?;
        if header.trim() != "energy" {
            return Err(EnergyError::Parse(format!(
                "expected CSV header 'energy', got '{}'",
                header.trim()
            )));
        }
        let mut energies = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let value: f64 = line.trim().parse().map_err(|e| {
                EnergyError::Parse(format!("row {}: '{}': {e}", lineno + 2, line.trim()))
            })?;
            energies.push(value);
        }
        Self::new(energies)
    }

    /// Serialize to the JSON wire form `{"energies": [...]}`.
    pub fn to_json_string(&self) -> String {
        #[derive(Serialize)]
        struct Wire<'a> {
            energies: &'a [f64],
        }
        serde_json::to_string(&Wire {
            energies: &self.energies,
        })
        .expect("profile serialization cannot fail")
    }

    /// Stable content hash (FNV-1a over the exact bit patterns), used to
    /// tag trials in experiment sidecars.
    pub fn content_hash(&self) -> u64 {
        let mut hash = 0xcbf29ce484222325u64;
        for &e in &self.energies {
            for byte in e.to_bits().to_le_bytes() {
                hash ^= byte as u64;
                hash = hash.wrapping_mul(0x100000001b3);
            }
        }
        hash
    }

    /// Hash rendered as fixed-width hex, the form written to sidecars.
    pub fn content_hash_hex(&self) -> String {
        let mut s = String::with_capacity(18);
        let _ = write!(s, "{:#018x}", self.content_hash());
        s
    }
}
