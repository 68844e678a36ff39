//! Spectrum-sensing toolkit for low access-latency cognitive radio.
//!
//! A secondary user (SU) transmits opportunistically and must vacate the
//! channel as soon as a primary user (PU) appears. This crate models the
//! energy detector behind that decision and three sensing schemes -- the
//! conventional half-duplex frame, slotted concurrent transmit-and-sense,
//! and per-sample sliding-window sensing -- and quantifies their access
//! latency and throughput:
//!
//! - [`special`] / [`stats`]: Gaussian tail and chi-square quantiles,
//!   empirical summaries.
//! - [`detector`]: the windowed-energy statistic, exact false-alarm
//!   calibration, detection probabilities for partially occupied windows.
//! - [`latency`]: closed-form average latency and throughput for the
//!   periodic-decision schemes plus the general latency series.
//! - [`sim`]: sample-level Monte-Carlo trials with deterministic
//!   per-trial random streams, parallelism-invariant.
//! - [`sweep`]: reproducible threshold / self-interference experiments
//!   with CSV and JSON output.
//!
//! All numerics are generic over the scalar type via [`Real`] (`f32` or
//! `f64`); the `*64` / `*32` aliases below pin the common choices. The
//! sweep layer is `f64`-only, matching its serialized output formats.

pub mod detector;
pub mod error;
pub mod latency;
pub mod num;
pub mod seed;
pub mod sim;
pub mod sliding;
pub mod special;
pub mod stats;
pub mod sweep;

pub use error::{Error, Result};
pub use num::Real;
pub use seed::SeedSpec;

/// Double-precision aliases (the default throughout the CLI and sweeps).
pub type RadioScenario64 = detector::RadioScenario<f64>;
pub type Detector64 = detector::Detector<f64>;
pub type DetectionProfile64 = latency::DetectionProfile<f64>;
pub type TrialConfig64 = sim::TrialConfig<f64>;
pub type LatencyDistribution64 = sim::LatencyDistribution<f64>;
pub type EmpiricalSummary64 = stats::EmpiricalSummary<f64>;

/// Single-precision aliases.
pub type RadioScenario32 = detector::RadioScenario<f32>;
pub type Detector32 = detector::Detector<f32>;
pub type DetectionProfile32 = latency::DetectionProfile<f32>;
pub type TrialConfig32 = sim::TrialConfig<f32>;
pub type LatencyDistribution32 = sim::LatencyDistribution<f32>;
pub type EmpiricalSummary32 = stats::EmpiricalSummary<f32>;
