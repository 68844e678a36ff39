//! Closed-form throughput and average access-latency for the half-duplex
//! and slotted full-duplex schemes, the general latency series they both
//! derive from, and the exact per-arrival-phase latency distribution used
//! for analytic quantiles.
//!
//! Latency is counted in samples from the start of the PU transmission to
//! the first detector decision that exceeds the threshold. The sliding
//! full-duplex scheme has no closed form here (its overlapping decisions
//! are dependent); it is covered by the Monte-Carlo engine.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::detector::{pd_analytic, Detector, RadioScenario, WindowOccupancy};
use crate::error::{Error, Result};
use crate::num::{db_to_linear, Real};

// ---------------------------------------------------------------------------
// Schemes and throughput
// ---------------------------------------------------------------------------

/// The three sensing schemes under comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    /// Dedicated sensing slot per frame; blind while transmitting.
    HalfDuplex,
    /// Concurrent transmit-and-sense, decisions every fresh `n_s` samples.
    SlottedFullDuplex,
    /// Concurrent transmit-and-sense, a decision at every sample over the
    /// trailing `n_s`-sample window.
    SlidingFullDuplex,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 3] = [
        SchemeKind::HalfDuplex,
        SchemeKind::SlottedFullDuplex,
        SchemeKind::SlidingFullDuplex,
    ];

    pub fn is_full_duplex(self) -> bool {
        !matches!(self, SchemeKind::HalfDuplex)
    }

    pub fn label(self) -> &'static str {
        match self {
            SchemeKind::HalfDuplex => "half_duplex",
            SchemeKind::SlottedFullDuplex => "slotted_full_duplex",
            SchemeKind::SlidingFullDuplex => "sliding_full_duplex",
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "half_duplex" | "hd" => Ok(SchemeKind::HalfDuplex),
            "slotted_full_duplex" | "slotted" => Ok(SchemeKind::SlottedFullDuplex),
            "sliding_full_duplex" | "sliding" => Ok(SchemeKind::SlidingFullDuplex),
            other => Err(Error::domain(format!("unknown scheme '{other}'"))),
        }
    }
}

/// One operating point on a latency-throughput curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThroughputPoint<T> {
    pub pf: T,
    pub normalized_throughput: T,
    pub scheme: SchemeKind,
}

/// SU capacity with the PU silent, bits/s/Hz.
pub fn capacity_c0<T: Real>(snr_su_db: T) -> T {
    (T::one() + db_to_linear(snr_su_db)).log2()
}

/// Normalized throughput (R / C0) at false-alarm probability `pf`.
///
/// Full-duplex schemes lose throughput only to false alarms; the
/// half-duplex scheme additionally pays the sensing overhead
/// `(n_frame - n_s) / n_frame`.
pub fn throughput<T: Real>(
    scheme: SchemeKind,
    pf: T,
    n_s: usize,
    n_frame: usize,
) -> ThroughputPoint<T> {
    debug_assert!(pf >= T::zero() && pf <= T::one());
    debug_assert!(n_s <= n_frame);
    let base = T::one() - pf;
    let normalized_throughput = if scheme.is_full_duplex() {
        base
    } else {
        T::of((n_frame - n_s) as f64) / T::of(n_frame as f64) * base
    };
    ThroughputPoint {
        pf,
        normalized_throughput,
        scheme,
    }
}

// ---------------------------------------------------------------------------
// Detection profile
// ---------------------------------------------------------------------------

/// Tabulated detection probabilities Pd(k) for windows holding
/// k = 1..=n_s PU samples; Pd(n_s) is the full-window probability.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionProfile<T> {
    pd: Vec<T>,
}

impl<T: Real> DetectionProfile<T> {
    /// `pd_by_k[k - 1]` is Pd(k).
    pub fn new(pd_by_k: Vec<T>) -> Result<Self> {
        if pd_by_k.is_empty() {
            return Err(Error::domain("detection profile must not be empty"));
        }
        for (i, &p) in pd_by_k.iter().enumerate() {
            if !(p >= T::zero() && p <= T::one()) {
                return Err(Error::domain(format!(
                    "Pd({}) = {p} outside [0, 1]",
                    i + 1
                )));
            }
        }
        Ok(Self { pd: pd_by_k })
    }

    /// Same probability for every occupancy, handy for tests and limits.
    pub fn constant(pd: T, n_s: usize) -> Result<Self> {
        if n_s == 0 {
            return Err(Error::domain("n_s must be >= 1"));
        }
        Self::new(vec![pd; n_s])
    }

    /// Tabulate Pd(k) from the detector analytics for one operating
    /// point. Uses the exact window tails so that closed-form latencies
    /// cross-validate against the Monte-Carlo engine at the percent
    /// level, which the Gaussian approximation cannot.
    pub fn from_detector(detector: &Detector<T>, scenario: &RadioScenario<T>) -> Result<Self> {
        let pd = (1..=detector.n_s)
            .map(|k| pd_analytic(detector, scenario, WindowOccupancy::new(k)))
            .collect::<Result<Vec<T>>>()?;
        Self::new(pd)
    }

    pub fn n_s(&self) -> usize {
        self.pd.len()
    }

    /// Full-window detection probability Pd(n_s).
    pub fn pd_full(&self) -> T {
        *self.pd.last().expect("profile is non-empty")
    }

    /// Pd(k) for k in 1..=n_s.
    pub fn pd_partial(&self, k: usize) -> T {
        assert!(k >= 1 && k <= self.pd.len(), "occupancy k out of range");
        self.pd[k - 1]
    }

    fn require_convergent(&self) -> Result<T> {
        let pd = self.pd_full();
        if pd <= T::zero() {
            return Err(Error::Divergence);
        }
        Ok(pd)
    }
}

// ---------------------------------------------------------------------------
// Closed forms
// ---------------------------------------------------------------------------

/// Expected latency when the PU arrives `n_blind` samples before the end
/// of the half-duplex blind interval: the first decision comes after
/// `n_blind + n_s` samples and recurs every frame.
///
/// Valid for `pd_full` in (0, 1]; `pd_full = 1` is the continuity limit
/// (detection at the first decision).
pub fn hd_latency_blind<T: Real>(
    n_blind: usize,
    profile: &DetectionProfile<T>,
    n_frame: usize,
) -> Result<T> {
    let n_s = profile.n_s();
    if n_blind == 0 || n_blind + n_s > n_frame {
        return Err(Error::domain(format!(
            "n_blind must lie in [1, n_frame - n_s], got {n_blind}"
        )));
    }
    let pd = profile.require_convergent()?;
    let first = T::of((n_blind + n_s) as f64);
    Ok(first + T::of(n_frame as f64) * (T::one() - pd) / pd)
}

/// Expected latency when the PU arrives `n_first` samples before the end
/// of the half-duplex sensing period: the first decision sees only
/// `n_first` PU samples, later decisions (one per frame) see full windows.
pub fn hd_latency_sensing<T: Real>(
    n_first: usize,
    profile: &DetectionProfile<T>,
    n_frame: usize,
) -> Result<T> {
    let n_s = profile.n_s();
    if n_first == 0 || n_first > n_s {
        return Err(Error::domain(format!(
            "n_first must lie in [1, n_s], got {n_first}"
        )));
    }
    let pd = profile.require_convergent()?;
    let pdp = profile.pd_partial(n_first);
    let nf = T::of(n_first as f64);
    let n = T::of(n_frame as f64);
    Ok(nf * pdp + pd * (T::one() - pdp) * (nf / pd + n / (pd * pd)))
}

/// Average half-duplex latency over the uniform PU arrival phase: blind
/// arrivals (weight 1/n_frame each over n_frame - n_s positions) plus
/// sensing arrivals (weight 1/n_frame over n_s positions).
pub fn hd_average_latency<T: Real>(
    profile: &DetectionProfile<T>,
    n_frame: usize,
) -> Result<T> {
    let n_s = profile.n_s();
    if n_s > n_frame {
        return Err(Error::domain("profile window exceeds frame length"));
    }
    let mut acc = T::zero();
    for n_blind in 1..=(n_frame - n_s) {
        acc = acc + hd_latency_blind(n_blind, profile, n_frame)?;
    }
    for n_first in 1..=n_s {
        acc = acc + hd_latency_sensing(n_first, profile, n_frame)?;
    }
    Ok(acc / T::of(n_frame as f64))
}

/// Expected slotted full-duplex latency for a PU arriving `n_first`
/// samples before the end of the current sensing block; there is no blind
/// interval and decisions recur every `n_s` samples.
pub fn slotted_fd_latency<T: Real>(n_first: usize, profile: &DetectionProfile<T>) -> Result<T> {
    let n_s = profile.n_s();
    if n_first == 0 || n_first > n_s {
        return Err(Error::domain(format!(
            "n_first must lie in [1, n_s], got {n_first}"
        )));
    }
    let pd = profile.require_convergent()?;
    let pdp = profile.pd_partial(n_first);
    let nf = T::of(n_first as f64);
    let ns = T::of(n_s as f64);
    Ok(nf * pdp + pd * (T::one() - pdp) * (nf / pd + ns / (pd * pd)))
}

/// Average slotted full-duplex latency over the uniform arrival phase
/// within one `n_s`-sample block.
pub fn slotted_fd_average_latency<T: Real>(profile: &DetectionProfile<T>) -> Result<T> {
    let n_s = profile.n_s();
    let mut acc = T::zero();
    for n_first in 1..=n_s {
        acc = acc + slotted_fd_latency(n_first, profile)?;
    }
    Ok(acc / T::of(n_s as f64))
}

/// Closed-form average latency for the scheme, where one exists.
pub fn average_latency<T: Real>(
    scheme: SchemeKind,
    profile: &DetectionProfile<T>,
    n_frame: usize,
) -> Result<T> {
    match scheme {
        SchemeKind::HalfDuplex => hd_average_latency(profile, n_frame),
        SchemeKind::SlottedFullDuplex => slotted_fd_average_latency(profile),
        SchemeKind::SlidingFullDuplex => Err(Error::domain(
            "sliding full-duplex latency has no closed form; use the Monte-Carlo engine",
        )),
    }
}

// ---------------------------------------------------------------------------
// General latency series
// ---------------------------------------------------------------------------

/// Residual survival mass below which the series is truncated.
const SERIES_TAIL_EPS: f64 = 1e-12;
/// Residual mass that must have been consumed for the sum to count as an
/// expectation.
const SERIES_RESIDUAL_LIMIT: f64 = 1e-6;
const SERIES_TERM_CAP: usize = 1_000_000;

/// Expected latency over a sequence of decision points `(N_k, p_k)`:
/// sum of `N_k * p_k * prod_{j<k} (1 - p_j)`.
///
/// `N_k` must be strictly increasing; `p_k` are conditional detection
/// probabilities given all prior misses (valid for non-overlapping
/// windows). Accepts unbounded iterators: evaluation stops once the
/// residual survival mass drops below 1e-12, and fails with
/// [`Error::NonConvergence`] if more than 1e-6 of the mass remains after
/// the input (or the 1e6-term cap) is exhausted.
pub fn general_latency_series<T, I>(points: I) -> Result<T>
where
    T: Real,
    I: IntoIterator<Item = (u64, T)>,
{
    let mut survival = T::one();
    let mut sum = T::zero();
    let mut last: Option<u64> = None;
    let mut terms = 0usize;

    for (n_k, p_k) in points {
        if let Some(prev) = last {
            if n_k <= prev {
                return Err(Error::domain(format!(
                    "decision points must be strictly increasing ({n_k} after {prev})"
                )));
            }
        }
        if !(p_k >= T::zero() && p_k <= T::one()) {
            return Err(Error::domain(format!("p_k = {p_k} outside [0, 1]")));
        }
        last = Some(n_k);
        terms += 1;
        sum = sum + T::of(n_k as f64) * p_k * survival;
        survival = survival * (T::one() - p_k);
        if survival < T::of(SERIES_TAIL_EPS) {
            return Ok(sum);
        }
        if terms >= SERIES_TERM_CAP {
            break;
        }
    }

    if terms == 0 {
        return Err(Error::domain("general_latency_series requires decision points"));
    }
    if survival > T::of(SERIES_RESIDUAL_LIMIT) {
        return Err(Error::NonConvergence {
            residual: survival.as_f64(),
            terms,
        });
    }
    Ok(sum)
}

// ---------------------------------------------------------------------------
// Exact latency distribution (HD / slotted)
// ---------------------------------------------------------------------------

/// One arrival phase of a periodic-decision scheme: the first decision
/// comes `first_latency` samples after arrival with probability
/// `p_first`; misses retry every `period` samples with the full-window
/// probability.
#[derive(Debug, Clone, Copy)]
struct PhaseLaw<T> {
    weight: T,
    first_latency: u64,
    p_first: T,
}

/// Exact latency distribution of a periodic-decision scheme, enumerated
/// over arrival phases; gives analytic quantiles to go with the
/// closed-form means.
#[derive(Debug, Clone)]
pub struct LatencyPmf<T> {
    phases: Vec<PhaseLaw<T>>,
    period: u64,
    pd_full: T,
}

const PMF_BLOCK_CAP: u64 = 1_000_000;

impl<T: Real> LatencyPmf<T> {
    /// Half-duplex: sensing-phase arrivals (n_first in 1..=n_s) and
    /// blind-phase arrivals (n_blind in 1..=n_frame - n_s), each with
    /// probability 1/n_frame; decisions recur once per frame.
    pub fn half_duplex(profile: &DetectionProfile<T>, n_frame: usize) -> Result<Self> {
        let n_s = profile.n_s();
        if n_s > n_frame {
            return Err(Error::domain("profile window exceeds frame length"));
        }
        let pd_full = profile.require_convergent()?;
        let w = T::one() / T::of(n_frame as f64);
        let mut phases = Vec::with_capacity(n_frame);
        for n_first in 1..=n_s {
            phases.push(PhaseLaw {
                weight: w,
                first_latency: n_first as u64,
                p_first: profile.pd_partial(n_first),
            });
        }
        for n_blind in 1..=(n_frame - n_s) {
            phases.push(PhaseLaw {
                weight: w,
                first_latency: (n_blind + n_s) as u64,
                p_first: pd_full,
            });
        }
        phases.sort_by_key(|p| p.first_latency);
        Ok(Self {
            phases,
            period: n_frame as u64,
            pd_full,
        })
    }

    /// Slotted full-duplex: arrivals uniform over one `n_s` block,
    /// decisions recur every `n_s` samples.
    pub fn slotted(profile: &DetectionProfile<T>) -> Result<Self> {
        let n_s = profile.n_s();
        let pd_full = profile.require_convergent()?;
        let w = T::one() / T::of(n_s as f64);
        let phases = (1..=n_s)
            .map(|n_first| PhaseLaw {
                weight: w,
                first_latency: n_first as u64,
                p_first: profile.pd_partial(n_first),
            })
            .collect();
        Ok(Self {
            phases,
            period: n_s as u64,
            pd_full,
        })
    }

    pub fn for_scheme(
        scheme: SchemeKind,
        profile: &DetectionProfile<T>,
        n_frame: usize,
    ) -> Result<Self> {
        match scheme {
            SchemeKind::HalfDuplex => Self::half_duplex(profile, n_frame),
            SchemeKind::SlottedFullDuplex => Self::slotted(profile),
            SchemeKind::SlidingFullDuplex => Err(Error::domain(
                "sliding full-duplex has no per-phase closed form",
            )),
        }
    }

    /// Mean latency, exact: the enumerated head plus the analytic
    /// geometric-tail remainder.
    pub fn mean(&self) -> T {
        let (mean, _) = self.walk(&[]);
        mean
    }

    /// Mean plus quantiles at the given levels (each in (0, 1)). A
    /// quantile is the smallest latency whose CDF reaches the level,
    /// matching the nearest-rank rule used on empirical samples.
    pub fn mean_and_quantiles(&self, levels: &[f64]) -> (T, Vec<(f64, u64)>) {
        self.walk(levels)
    }

    fn walk(&self, levels: &[f64]) -> (T, Vec<(f64, u64)>) {
        let mut sorted_levels: Vec<f64> = levels.to_vec();
        sorted_levels.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut quantiles: Vec<(f64, u64)> = Vec::with_capacity(levels.len());
        let mut next_level = sorted_levels.iter().copied().peekable();

        // Per-phase remaining tail mass and the probability of detection
        // at that phase's next decision.
        let mut tail: Vec<T> = self.phases.iter().map(|p| p.weight).collect();
        let mut p_next: Vec<T> = self.phases.iter().map(|p| p.p_first).collect();

        let tail_eps = T::of(1e-13).max(T::epsilon());
        let mut mean = T::zero();
        let mut cum = T::zero();
        let mut block = 0u64;
        loop {
            let mut remaining = T::zero();
            for (i, phase) in self.phases.iter().enumerate() {
                let latency = phase.first_latency + block * self.period;
                let emitted = tail[i] * p_next[i];
                mean = mean + T::of(latency as f64) * emitted;
                cum = cum + emitted;
                tail[i] = tail[i] * (T::one() - p_next[i]);
                p_next[i] = self.pd_full;
                remaining = remaining + tail[i];
                while let Some(&level) = next_level.peek() {
                    if cum.as_f64() >= level {
                        quantiles.push((level, latency));
                        next_level.next();
                    } else {
                        break;
                    }
                }
            }
            block += 1;
            if remaining < tail_eps || block >= PMF_BLOCK_CAP {
                // Analytic remainder of each phase's geometric tail.
                for (i, phase) in self.phases.iter().enumerate() {
                    let next = T::of((phase.first_latency + block * self.period) as f64);
                    let extra = T::of(self.period as f64) * (T::one() - self.pd_full)
                        / self.pd_full;
                    mean = mean + tail[i] * (next + extra);
                }
                // Saturate any level the enumeration never reached.
                for level in next_level {
                    quantiles.push((level, block * self.period));
                }
                break;
            }
        }
        (mean, quantiles)
    }
}
