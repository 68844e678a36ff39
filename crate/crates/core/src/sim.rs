//! Sample-level Monte-Carlo simulation of access latency for the three
//! sensing schemes.
//!
//! Each trial conditions on the SU transmitting when the PU arrives and
//! simulates the received stream from the arrival onward: noise, residual
//! self-interference (full-duplex schemes only), and the PU signal, all
//! circular complex Gaussian. The latency clock starts at the arrival;
//! false alarms before it do not end a trial. Windows straddling the
//! arrival use the genuinely mixed stream, which is what makes this
//! engine authoritative over the Gaussian Pd(k) approximation -- and the
//! only route to the sliding scheme, whose overlapping decisions are
//! dependent.

use num_complex::Complex;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::detector::{Detector, RadioScenario};
use crate::error::{Error, Result};
use crate::latency::SchemeKind;
use crate::num::Real;
use crate::seed::SeedSpec;
use crate::sliding::SlidingWindow;
use crate::stats::{summarize, EmpiricalSummary};

/// Quantile levels reported by every batch.
pub const BATCH_QUANTILES: [f64; 2] = [0.95, 0.99];

/// One circular complex Gaussian sample of the given (linear) power.
pub fn complex_gaussian<T: Real, R: Rng + ?Sized>(rng: &mut R, power: T) -> Complex<T> {
    let scale = (power / T::of(2.0)).sqrt();
    Complex::new(
        T::standard_normal(rng) * scale,
        T::standard_normal(rng) * scale,
    )
}

/// Everything one trial needs: scenario, scheme, calibrated detector,
/// seed, and the truncation horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialConfig<T> {
    pub scenario: RadioScenario<T>,
    pub scheme: SchemeKind,
    pub detector: Detector<T>,
    pub seed: SeedSpec,
    pub max_samples: u64,
}

impl<T: Real> TrialConfig<T> {
    /// Default truncation horizon: the latency tail is geometric, so a
    /// thousand frames keeps truncation bias below reporting precision.
    pub fn default_horizon(scenario: &RadioScenario<T>) -> u64 {
        1000 * scenario.n_frame as u64
    }

    pub fn new(
        scenario: RadioScenario<T>,
        scheme: SchemeKind,
        detector: Detector<T>,
        seed: SeedSpec,
        max_samples: u64,
    ) -> Result<Self> {
        if detector.n_s != scenario.n_s {
            return Err(Error::domain(format!(
                "detector window ({}) must match scenario window ({})",
                detector.n_s, scenario.n_s
            )));
        }
        let expected_floor = match scheme {
            SchemeKind::HalfDuplex => scenario.hd_sensing_floor(),
            _ => scenario.fd_sensing_floor(),
        };
        let diff = (detector.sensing_floor - expected_floor).abs();
        if diff > expected_floor * T::of(1e-9) {
            return Err(Error::domain(format!(
                "detector sensing_floor {} inconsistent with the {} scheme (expected {})",
                detector.sensing_floor,
                scheme.label(),
                expected_floor
            )));
        }
        if max_samples < 100 * scenario.n_frame as u64 {
            return Err(Error::domain(
                "max_samples must cover at least 100 frames",
            ));
        }
        Ok(Self {
            scenario,
            scheme,
            detector,
            seed,
            max_samples,
        })
    }

    /// Config for a detector calibrated to `target_pf` on the scheme's own
    /// sensing floor, with the default horizon.
    pub fn for_target_pf(
        scenario: RadioScenario<T>,
        scheme: SchemeKind,
        target_pf: T,
        seed: SeedSpec,
    ) -> Result<Self> {
        let floor = match scheme {
            SchemeKind::HalfDuplex => scenario.hd_sensing_floor(),
            _ => scenario.fd_sensing_floor(),
        };
        let detector = Detector::for_target_pf(target_pf, scenario.n_s, floor)?;
        Self::new(
            scenario,
            scheme,
            detector,
            seed,
            Self::default_horizon(&scenario),
        )
    }

    /// Same config addressed to the `i`-th trial stream of the batch.
    pub fn trial(mut self, i: u64) -> Self {
        self.seed = self.seed.for_trial(self.seed.trial_index + i);
        self
    }
}

/// Latency measured by one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatencySample {
    /// Samples from PU arrival to the first detection; equals the horizon
    /// when truncated.
    pub latency: u64,
    /// PU arrival offset within the scheme's frame cycle (sample index of
    /// the first PU sample: 0 at the start of the sensing window / block;
    /// always 0 for the cycle-free sliding scheme).
    pub arrival_phase: u32,
    pub truncated: bool,
}

/// Aggregated batch outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct LatencyDistribution<T> {
    pub samples: Vec<LatencySample>,
    pub summary: EmpiricalSummary<T>,
    pub truncation_rate: T,
}

impl<T: Real> LatencyDistribution<T> {
    /// A distribution is only trustworthy if truncation is negligible.
    pub fn is_valid(&self) -> bool {
        self.truncation_rate < T::of(1e-3)
    }

    pub fn mean(&self) -> T {
        self.summary.mean
    }
}

/// Run one trial, drawing the PU arrival phase uniformly over the
/// scheme's frame cycle.
pub fn run_trial<T: Real>(config: &TrialConfig<T>) -> LatencySample {
    let mut rng = config.seed.rng();
    let phase = match config.scheme {
        SchemeKind::HalfDuplex => rng.random_range(0..config.scenario.n_frame as u32),
        SchemeKind::SlottedFullDuplex => rng.random_range(0..config.scenario.n_s as u32),
        SchemeKind::SlidingFullDuplex => 0,
    };
    simulate(config, phase, &mut rng)
}

/// Run one trial at a fixed arrival phase (see [`LatencySample`] for the
/// phase convention). Exposed for calibration tests and debugging.
pub fn run_trial_at_phase<T: Real>(config: &TrialConfig<T>, phase: u32) -> Result<LatencySample> {
    let cycle = match config.scheme {
        SchemeKind::HalfDuplex => config.scenario.n_frame,
        SchemeKind::SlottedFullDuplex => config.scenario.n_s,
        SchemeKind::SlidingFullDuplex => 1,
    };
    if phase as usize >= cycle {
        return Err(Error::domain(format!(
            "arrival phase {phase} outside the scheme cycle of {cycle}"
        )));
    }
    let mut rng = config.seed.rng();
    Ok(simulate(config, phase, &mut rng))
}

/// Run `trials` independent trials with per-trial streams derived from
/// `(master_seed, trial_index + i)`; the result is identical for any
/// degree of parallelism.
pub fn run_batch<T: Real>(config: &TrialConfig<T>, trials: u64) -> Result<LatencyDistribution<T>> {
    if trials == 0 {
        return Err(Error::domain("run_batch requires trials >= 1"));
    }
    let samples: Vec<LatencySample> = (0..trials)
        .into_par_iter()
        .map(|i| run_trial(&config.trial(i)))
        .collect();
    let latencies: Vec<T> = samples.iter().map(|s| T::of(s.latency as f64)).collect();
    let summary = summarize(&latencies, &BATCH_QUANTILES)?;
    let truncated = samples.iter().filter(|s| s.truncated).count();
    let truncation_rate = T::of(truncated as f64) / T::of(trials as f64);
    Ok(LatencyDistribution {
        samples,
        summary,
        truncation_rate,
    })
}

// ---------------------------------------------------------------------------
// Per-scheme sample-level simulation
// ---------------------------------------------------------------------------

fn simulate<T: Real>(config: &TrialConfig<T>, phase: u32, rng: &mut ChaCha8Rng) -> LatencySample {
    match config.scheme {
        SchemeKind::HalfDuplex => simulate_periodic(config, phase, rng, true),
        SchemeKind::SlottedFullDuplex => simulate_periodic(config, phase, rng, false),
        SchemeKind::SlidingFullDuplex => simulate_sliding(config, rng),
    }
}

/// Mean power over one sensing window made of `head` pre-arrival samples
/// (floor only) followed by `tail` post-arrival samples (floor + PU).
fn mixed_window_metric<T: Real>(
    rng: &mut ChaCha8Rng,
    head: usize,
    floor: T,
    tail: usize,
    occupied: T,
) -> T {
    let mut sum = T::zero();
    for _ in 0..head {
        sum = sum + complex_gaussian(rng, floor).norm_sqr();
    }
    for _ in 0..tail {
        sum = sum + complex_gaussian(rng, occupied).norm_sqr();
    }
    sum / T::of((head + tail) as f64)
}

/// Shared engine for the two periodic-decision schemes. Half-duplex
/// senses in a dedicated slot (no self-interference, one decision per
/// frame); slotted full-duplex senses concurrently (floor includes the
/// residual self-interference, one decision per block).
fn simulate_periodic<T: Real>(
    config: &TrialConfig<T>,
    phase: u32,
    rng: &mut ChaCha8Rng,
    half_duplex: bool,
) -> LatencySample {
    let scenario = &config.scenario;
    let detector = &config.detector;
    let n_s = scenario.n_s;
    let floor = detector.sensing_floor;
    let occupied = floor + scenario.pu_power();
    let period = if half_duplex {
        scenario.n_frame as u64
    } else {
        n_s as u64
    };

    // First decision after the arrival. An arrival inside the sensing
    // window (phase < n_s) yields a mixed window with `phase` stale
    // samples; a half-duplex arrival in the blind interval waits out the
    // remaining n_frame - phase samples plus a full sensing window.
    let phase_idx = phase as usize;
    let (mut elapsed, first_metric) = if phase_idx < n_s {
        let tail = n_s - phase_idx;
        (
            tail as u64,
            mixed_window_metric(rng, phase_idx, floor, tail, occupied),
        )
    } else {
        let wait = (scenario.n_frame - phase_idx) as u64 + n_s as u64;
        (
            wait,
            mixed_window_metric(rng, 0, floor, n_s, occupied),
        )
    };
    if detector.decide(first_metric) {
        return LatencySample {
            latency: elapsed,
            arrival_phase: phase,
            truncated: false,
        };
    }

    loop {
        elapsed += period;
        if elapsed > config.max_samples {
            return LatencySample {
                latency: config.max_samples,
                arrival_phase: phase,
                truncated: true,
            };
        }
        let metric = mixed_window_metric(rng, 0, floor, n_s, occupied);
        if detector.decide(metric) {
            return LatencySample {
                latency: elapsed,
                arrival_phase: phase,
                truncated: false,
            };
        }
    }
}

/// Sliding full-duplex: warm the FIFO with `n_s` pre-arrival samples,
/// then decide at every post-arrival sample over the trailing window.
fn simulate_sliding<T: Real>(config: &TrialConfig<T>, rng: &mut ChaCha8Rng) -> LatencySample {
    let scenario = &config.scenario;
    let detector = &config.detector;
    let floor = detector.sensing_floor;
    let occupied = floor + scenario.pu_power();

    let mut window = SlidingWindow::new(scenario.n_s);
    for _ in 0..scenario.n_s {
        window.push(complex_gaussian(rng, floor).norm_sqr());
    }

    let mut elapsed = 0u64;
    loop {
        if elapsed >= config.max_samples {
            return LatencySample {
                latency: config.max_samples,
                arrival_phase: 0,
                truncated: true,
            };
        }
        elapsed += 1;
        let metric = window
            .push(complex_gaussian(rng, occupied).norm_sqr())
            .expect("window is warm");
        if detector.decide(metric) {
            return LatencySample {
                latency: elapsed,
                arrival_phase: 0,
                truncated: false,
            };
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario() -> RadioScenario<f64> {
        RadioScenario::with_unit_noise(0.0, f64::NEG_INFINITY, 16, 128).unwrap()
    }

    fn config_with_threshold(scheme: SchemeKind, threshold: f64) -> TrialConfig<f64> {
        let scen = scenario();
        let det = Detector::new(threshold, 16, 1.0).unwrap();
        TrialConfig::new(scen, scheme, det, SeedSpec::new(123), 128_000).unwrap()
    }

    #[test]
    fn always_detect_sliding_latency_is_one() {
        let config = config_with_threshold(SchemeKind::SlidingFullDuplex, 0.0);
        for i in 0..100 {
            let s = run_trial(&config.trial(i));
            assert_eq!(s.latency, 1);
            assert!(!s.truncated);
        }
    }

    #[test]
    fn always_detect_slotted_latency_is_first_block_boundary() {
        let config = config_with_threshold(SchemeKind::SlottedFullDuplex, 0.0);
        for phase in 0..16u32 {
            let s = run_trial_at_phase(&config, phase).unwrap();
            assert_eq!(s.latency, 16 - phase as u64, "phase {phase}");
        }
        // N_first = 7 corresponds to an arrival 9 samples into the block.
        assert_eq!(run_trial_at_phase(&config, 9).unwrap().latency, 7);
    }

    #[test]
    fn always_detect_half_duplex_phases() {
        let config = config_with_threshold(SchemeKind::HalfDuplex, 0.0);
        for phase in 0..128u32 {
            let s = run_trial_at_phase(&config, phase).unwrap();
            let expect = if phase < 16 {
                16 - phase as u64
            } else {
                (128 - phase as u64) + 16
            };
            assert_eq!(s.latency, expect, "phase {phase}");
        }
        assert!(run_trial_at_phase(&config, 128).is_err());
    }

    #[test]
    fn impossible_detection_truncates() {
        let config = config_with_threshold(SchemeKind::SlidingFullDuplex, 1e9);
        let s = run_trial(&config);
        assert!(s.truncated);
        assert_eq!(s.latency, config.max_samples);

        let batch = run_batch(&config, 8).unwrap();
        assert!(!batch.is_valid());
        assert_eq!(batch.truncation_rate, 1.0);
    }

    #[test]
    fn batches_are_reproducible() {
        let config =
            TrialConfig::for_target_pf(scenario(), SchemeKind::SlottedFullDuplex, 0.1, SeedSpec::new(7))
                .unwrap();
        let a = run_batch(&config, 2_000).unwrap();
        let b = run_batch(&config, 2_000).unwrap();
        assert_eq!(a.samples, b.samples);
        assert_eq!(a.summary.mean, b.summary.mean);
        assert_eq!(a.summary.quantile(0.95), b.summary.quantile(0.95));
    }

    #[test]
    fn single_trial_batch() {
        let config = config_with_threshold(SchemeKind::SlidingFullDuplex, 0.0);
        let d = run_batch(&config, 1).unwrap();
        assert_eq!(d.samples.len(), 1);
        assert_eq!(d.summary.count, 1);
        assert!(run_batch(&config, 0).is_err());
    }

    #[test]
    fn config_validation() {
        let scen = scenario();
        let det_bad_ns = Detector::new(1.0f64, 8, 1.0).unwrap();
        assert!(
            TrialConfig::new(scen, SchemeKind::HalfDuplex, det_bad_ns, SeedSpec::new(1), 128_000)
                .is_err()
        );
        let det = Detector::new(1.0f64, 16, 1.0).unwrap();
        assert!(
            TrialConfig::new(scen, SchemeKind::HalfDuplex, det, SeedSpec::new(1), 100).is_err()
        );
        // Full-duplex scheme must carry the inflated sensing floor.
        let scen_inr = RadioScenario::with_unit_noise(0.0, 10.0, 16, 128).unwrap();
        let det_noise_only = Detector::new(1.0f64, 16, 1.0).unwrap();
        assert!(TrialConfig::new(
            scen_inr,
            SchemeKind::SlottedFullDuplex,
            det_noise_only,
            SeedSpec::new(1),
            128_000
        )
        .is_err());
        let det_fd = Detector::new(1.0f64, 16, 11.0).unwrap();
        assert!(TrialConfig::new(
            scen_inr,
            SchemeKind::SlottedFullDuplex,
            det_fd,
            SeedSpec::new(1),
            128_000
        )
        .is_ok());
    }

    #[test]
    fn half_duplex_senses_without_self_interference() {
        // With huge INR the FD floor explodes but the HD sensing slot
        // still sees only the unit noise floor.
        let scen = RadioScenario::with_unit_noise(0.0, 30.0, 16, 128).unwrap();
        let det = Detector::for_target_pf(0.1, 16, scen.hd_sensing_floor()).unwrap();
        let config =
            TrialConfig::new(scen, SchemeKind::HalfDuplex, det, SeedSpec::new(5), 128_000).unwrap();
        let batch = run_batch(&config, 4_000).unwrap();
        assert!(batch.is_valid());
        // SNR 0 dB detection succeeds quickly; a 1001-frame horizon with
        // an effective floor of 1001 would not.
        assert!(batch.mean() < 200.0, "mean {}", batch.mean());
    }
}
