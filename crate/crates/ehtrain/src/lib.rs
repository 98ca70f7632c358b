//! Training-schedule optimization for energy-harvesting transmitters.
//!
//! A transmitter that runs on harvested energy has to spend part of its
//! energy budget *learning* the channel (pilot slots) before it can spend
//! the rest *using* the channel (data slots). Training longer gives a better
//! channel estimate but leaves less time and energy for data; training less
//! does the opposite. This crate computes that trade-off for a block-fading
//! point-to-point link with an MMSE channel estimator:
//!
//! - [`energy`] — harvest profiles, channel/link parameters, energy
//!   neutrality checks, and deterministic random-profile generation;
//! - [`special`] — the exponential-integral kernel the achievable-rate
//!   expression is built from;
//! - [`dwf`] — directional water-filling: causally feasible power
//!   allocations that maximize the data-phase rate;
//! - [`throughput`] — the achievable-rate model for a given training
//!   decision plus a Monte Carlo cross-check;
//! - [`policies`] — schedulers that pick the training period (and the
//!   energy split inside the last pilot slot), from exhaustive search down
//!   to cheap fixed rules, plus two upper bounds;
//! - [`sim`] — batch experiment drivers (policy sweeps, fixed-period
//!   sweeps, closed-form validation) used by the `ehtrain` CLI.
//!
//! The long-form guide lives in `book/` at the repository root; its code
//! snippets are compiled and run as doc-tests via the [`guide`] module.

pub mod dwf;
pub mod energy;
pub mod policies;
pub mod sim;
pub mod special;
pub mod throughput;

#[cfg(doctest)]
mod guide;

pub use dwf::{PowerAllocation, SuffixAllocator, TrainingDecision};
pub use energy::{ChannelParams, EnergyProfile, RngSpec};
pub use policies::PolicyOutcome;
