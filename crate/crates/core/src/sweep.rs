//! Reproducible sweep experiments over detector operating points:
//! latency-throughput threshold sweeps and residual-self-interference
//! sweeps at a fixed throughput or a fixed latency target, emitted as
//! CSV rows or JSON with full provenance metadata.
//!
//! The sweep layer is `f64`-concrete: its outputs are serialized with
//! pinned decimal formats.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::detector::{pf_analytic, threshold_for_pf, Detector, RadioScenario};
use crate::error::{Error, Result};
use crate::latency::{throughput, DetectionProfile, LatencyPmf, SchemeKind};
use crate::seed::{SeedSpec, RNG_ALGORITHM};
use crate::sim::{run_batch, LatencyDistribution, TrialConfig};

/// Exact header of every CSV emitted by [`write_csv`].
pub const CSV_HEADER: &str =
    "scheme,epsilon,pf,throughput_norm,latency_mean,latency_p95,latency_p99,trials,truncation_rate";

/// Relative tolerance on the fixed-latency bisection target.
pub const LATENCY_TARGET_TOLERANCE: f64 = 0.02;
/// Probe budget of the fixed-latency bisection.
pub const MAX_BISECTION_PROBES: u32 = 20;

// ---------------------------------------------------------------------------
// Specification
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    ThresholdSweep,
    QuantileSweep,
    InrSweepFixedThroughput,
    InrSweepFixedLatency,
}

/// What the grid values mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GridUnit {
    /// Raw decision thresholds, shared by every scheme.
    #[default]
    Epsilon,
    /// Per-decision false-alarm targets; each scheme is calibrated on its
    /// own sensing floor so all schemes operate at the same Pf.
    TargetPf,
    /// Residual self-interference levels in dB (INR sweeps only).
    InrDb,
}

/// Serde-friendly scenario: `inr_db: null` (or omitted) means perfect
/// self-interference suppression (-inf dB).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub snr_pu_db: f64,
    #[serde(default)]
    pub inr_db: Option<f64>,
    #[serde(default = "default_noise_power")]
    pub noise_power: f64,
    pub n_s: usize,
    pub n_frame: usize,
}

fn default_noise_power() -> f64 {
    1.0
}

impl ScenarioSpec {
    pub fn to_scenario(&self) -> Result<RadioScenario<f64>> {
        RadioScenario::new(
            self.snr_pu_db,
            self.inr_db.unwrap_or(f64::NEG_INFINITY),
            self.noise_power,
            self.n_s,
            self.n_frame,
        )
    }

    fn with_inr(mut self, inr_db: f64) -> Self {
        self.inr_db = if inr_db == f64::NEG_INFINITY {
            None
        } else {
            Some(inr_db)
        };
        self
    }
}

/// Full description of one sweep run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub kind: SweepKind,
    pub scenario: ScenarioSpec,
    pub schemes: Vec<SchemeKind>,
    /// Strictly increasing grid; thresholds / Pf targets for threshold
    /// and quantile sweeps, INR values in dB for INR sweeps.
    pub grid: Vec<f64>,
    #[serde(default)]
    pub grid_unit: GridUnit,
    pub trials: u64,
    pub seed: SeedSpec,
    /// Normalized-throughput target (fixed-throughput sweep) or average
    /// latency target in samples (fixed-latency sweep).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<f64>,
}

impl SweepSpec {
    fn is_inr_kind(&self) -> bool {
        matches!(
            self.kind,
            SweepKind::InrSweepFixedThroughput | SweepKind::InrSweepFixedLatency
        )
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.to_scenario()?;
        if self.schemes.is_empty() {
            return Err(Error::InvalidSpec("no schemes selected".into()));
        }
        for (i, s) in self.schemes.iter().enumerate() {
            if self.schemes[..i].contains(s) {
                return Err(Error::InvalidSpec(format!("duplicate scheme {s}")));
            }
        }
        if self.grid.is_empty() {
            return Err(Error::InvalidSpec("grid must not be empty".into()));
        }
        for pair in self.grid.windows(2) {
            if !(pair[1] > pair[0]) {
                return Err(Error::InvalidSpec(format!(
                    "grid must be strictly increasing ({} after {})",
                    pair[1], pair[0]
                )));
            }
        }
        if self.is_inr_kind() {
            for &g in &self.grid {
                if g.is_nan() || g == f64::INFINITY {
                    return Err(Error::InvalidSpec(format!("bad INR grid value {g}")));
                }
            }
            let target = self.target.ok_or_else(|| {
                Error::InvalidSpec("INR sweeps require a target".into())
            })?;
            match self.kind {
                SweepKind::InrSweepFixedThroughput => {
                    if !(target > 0.0 && target < 1.0) {
                        return Err(Error::InvalidSpec(format!(
                            "throughput target must lie in (0, 1), got {target}"
                        )));
                    }
                }
                SweepKind::InrSweepFixedLatency => {
                    if !(target >= 1.0 && target.is_finite()) {
                        return Err(Error::InvalidSpec(format!(
                            "latency target must be >= 1 sample, got {target}"
                        )));
                    }
                }
                _ => unreachable!(),
            }
            if self.schemes.iter().any(|s| !s.is_full_duplex()) {
                return Err(Error::InvalidSpec(
                    "INR sweeps apply to the full-duplex schemes only".into(),
                ));
            }
            if self.trials == 0 {
                return Err(Error::InvalidSpec("INR sweeps require trials >= 1".into()));
            }
        } else {
            if self.target.is_some() {
                return Err(Error::InvalidSpec(
                    "target is only meaningful for INR sweeps".into(),
                ));
            }
            match self.grid_unit {
                GridUnit::Epsilon => {
                    for &g in &self.grid {
                        if !(g >= 0.0) || !g.is_finite() {
                            return Err(Error::InvalidSpec(format!("bad threshold {g}")));
                        }
                    }
                }
                GridUnit::TargetPf => {
                    for &g in &self.grid {
                        if !(g > 0.0 && g < 1.0) {
                            return Err(Error::InvalidSpec(format!(
                                "Pf grid values must lie in (0, 1), got {g}"
                            )));
                        }
                    }
                }
                GridUnit::InrDb => {
                    return Err(Error::InvalidSpec(
                        "inr_db grid is only valid for INR sweeps".into(),
                    ));
                }
            }
            if self.trials == 0
                && self.schemes.contains(&SchemeKind::SlidingFullDuplex)
            {
                return Err(Error::InvalidSpec(
                    "the sliding scheme has no closed form; trials must be >= 1".into(),
                ));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Results
// ---------------------------------------------------------------------------

/// How a row's latency statistics were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowSource {
    /// Closed forms; `trials` is 0.
    Analytic,
    MonteCarlo,
}

/// One operating point. Analytic and Monte-Carlo rows for the same
/// `(scheme, epsilon)` are distinguished by `source` (and `trials`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub scheme: SchemeKind,
    pub epsilon: f64,
    pub pf: f64,
    pub throughput_norm: f64,
    pub latency_mean: f64,
    pub latency_p95: f64,
    pub latency_p99: f64,
    pub trials: u64,
    pub truncation_rate: f64,
    pub source: RowSource,
    /// Grid INR for INR sweeps (None for perfect suppression).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inr_db: Option<f64>,
    /// Fixed-latency rows whose target could not be reached; excluded
    /// from CSV output.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub unreachable: bool,
}

/// Least-squares latency-vs-INR(dB) slope of one scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub scheme: SchemeKind,
    pub slope_per_db: f64,
}

/// Root-finding settings recorded for fixed-latency sweeps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSettings {
    pub latency_tolerance: f64,
    pub max_probes: u32,
    pub probe_trials: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepMetadata {
    pub kind: SweepKind,
    pub scenario: ScenarioSpec,
    pub schemes: Vec<SchemeKind>,
    pub grid: Vec<f64>,
    pub grid_unit: GridUnit,
    pub trials: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<f64>,
    pub seed: SeedSpec,
    pub artifact_version: String,
    pub rng: String,
    /// Unix seconds at emit time; the only run-dependent field, kept out
    /// of the CSV so CSV re-runs are byte-identical.
    pub timestamp: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slopes: Option<Vec<SlopeFit>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope_ratio_slotted_over_sliding: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search: Option<SearchSettings>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub metadata: SweepMetadata,
}

impl SweepResult {
    pub fn all_unreachable(&self) -> bool {
        !self.rows.is_empty() && self.rows.iter().all(|r| r.unreachable)
    }
}

fn metadata_for(spec: &SweepSpec) -> SweepMetadata {
    let timestamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs().to_string())
        .unwrap_or_default();
    SweepMetadata {
        kind: spec.kind,
        scenario: spec.scenario,
        schemes: spec.schemes.clone(),
        grid: spec.grid.clone(),
        grid_unit: spec.grid_unit,
        trials: spec.trials,
        target: spec.target,
        seed: spec.seed,
        artifact_version: env!("CARGO_PKG_VERSION").to_string(),
        rng: RNG_ALGORITHM.to_string(),
        timestamp,
        slopes: None,
        slope_ratio_slotted_over_sliding: None,
        search: None,
    }
}

// ---------------------------------------------------------------------------
// Sweep runners
// ---------------------------------------------------------------------------

fn scheme_floor(scheme: SchemeKind, scenario: &RadioScenario<f64>) -> f64 {
    if scheme.is_full_duplex() {
        scenario.fd_sensing_floor()
    } else {
        scenario.hd_sensing_floor()
    }
}

fn mc_row(
    scheme: SchemeKind,
    epsilon: f64,
    pf: f64,
    throughput_norm: f64,
    batch: &LatencyDistribution<f64>,
    trials: u64,
    inr_db: Option<f64>,
) -> SweepRow {
    SweepRow {
        scheme,
        epsilon,
        pf,
        throughput_norm,
        latency_mean: batch.mean(),
        latency_p95: batch.summary.quantile(0.95).expect("batch quantile"),
        latency_p99: batch.summary.quantile(0.99).expect("batch quantile"),
        trials,
        truncation_rate: batch.truncation_rate,
        source: RowSource::MonteCarlo,
        inr_db,
        unreachable: false,
    }
}

fn sample_std(batch: &LatencyDistribution<f64>) -> f64 {
    let n = batch.samples.len();
    if n < 2 {
        return 0.0;
    }
    let mean = batch.mean();
    let ss: f64 = batch
        .samples
        .iter()
        .map(|s| {
            let d = s.latency as f64 - mean;
            d * d
        })
        .sum();
    (ss / (n as f64 - 1.0)).sqrt()
}

/// Monte-Carlo mean must sit within max(1%, three standard errors) of the
/// closed form; anything further means the modules disagree.
fn check_consistency(
    scheme: SchemeKind,
    epsilon: f64,
    analytic_mean: f64,
    batch: &LatencyDistribution<f64>,
) -> Result<()> {
    if !batch.is_valid() {
        // Truncation biases the empirical mean; the row is already
        // flagged through truncation_rate.
        return Ok(());
    }
    let mc = batch.mean();
    let se = sample_std(batch) / (batch.samples.len() as f64).sqrt();
    let tol = (0.01 * analytic_mean).max(3.0 * se);
    if (mc - analytic_mean).abs() > tol {
        return Err(Error::Consistency(format!(
            "{scheme} at eps = {epsilon:.6}: Monte-Carlo mean {mc:.4} vs analytic {analytic_mean:.4} (tolerance {tol:.4})"
        )));
    }
    Ok(())
}

/// Threshold (or quantile) sweep: one analytic row per (threshold,
/// HD/slotted scheme) with exact closed-form mean and distribution
/// quantiles, plus Monte-Carlo rows for every scheme when `trials > 0`
/// (the sliding scheme is Monte-Carlo only). Monte-Carlo means are
/// cross-checked against the closed forms.
pub fn run_threshold_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    if !matches!(spec.kind, SweepKind::ThresholdSweep | SweepKind::QuantileSweep) {
        return Err(Error::InvalidSpec(format!(
            "run_threshold_sweep cannot run a {:?}",
            spec.kind
        )));
    }
    spec.validate()?;
    let scenario = spec.scenario.to_scenario()?;
    let mut rows = Vec::new();

    for &g in &spec.grid {
        for &scheme in &spec.schemes {
            let floor = scheme_floor(scheme, &scenario);
            let epsilon = match spec.grid_unit {
                GridUnit::Epsilon => g,
                GridUnit::TargetPf => threshold_for_pf(g, scenario.n_s, floor)?,
                GridUnit::InrDb => unreachable!("rejected by validate"),
            };
            let detector = Detector::new(epsilon, scenario.n_s, floor)?;
            let pf = pf_analytic(&detector);
            let tp = throughput(scheme, pf, scenario.n_s, scenario.n_frame);

            let analytic_mean = if scheme == SchemeKind::SlidingFullDuplex {
                None
            } else {
                let profile = DetectionProfile::from_detector(&detector, &scenario)?;
                let pmf = LatencyPmf::for_scheme(scheme, &profile, scenario.n_frame)?;
                let (mean, qs) = pmf.mean_and_quantiles(&[0.95, 0.99]);
                rows.push(SweepRow {
                    scheme,
                    epsilon,
                    pf,
                    throughput_norm: tp.normalized_throughput,
                    latency_mean: mean,
                    latency_p95: qs[0].1 as f64,
                    latency_p99: qs[1].1 as f64,
                    trials: 0,
                    truncation_rate: 0.0,
                    source: RowSource::Analytic,
                    inr_db: None,
                    unreachable: false,
                });
                Some(mean)
            };

            if spec.trials > 0 {
                let config = TrialConfig::new(
                    scenario,
                    scheme,
                    detector,
                    spec.seed,
                    TrialConfig::default_horizon(&scenario),
                )?;
                let batch = run_batch(&config, spec.trials)?;
                if let Some(mean) = analytic_mean {
                    check_consistency(scheme, epsilon, mean, &batch)?;
                }
                rows.push(mc_row(
                    scheme,
                    epsilon,
                    pf,
                    tp.normalized_throughput,
                    &batch,
                    spec.trials,
                    None,
                ));
            }
        }
    }
    Ok(SweepResult {
        rows,
        metadata: metadata_for(spec),
    })
}

fn fit_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<&(f64, f64)> = points.iter().filter(|(x, _)| x.is_finite()).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|(x, _)| x).sum::<f64>() / n;
    let my = pts.iter().map(|(_, y)| y).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Latency vs residual self-interference at a fixed normalized
/// throughput: every grid point is calibrated to `pf = 1 - target` on its
/// own inflated sensing floor, then measured by Monte-Carlo. Also fits
/// the latency-vs-INR(dB) slope per scheme and their slotted/sliding
/// ratio into the metadata.
pub fn run_inr_sweep_fixed_throughput(spec: &SweepSpec) -> Result<SweepResult> {
    if spec.kind != SweepKind::InrSweepFixedThroughput {
        return Err(Error::InvalidSpec(format!(
            "run_inr_sweep_fixed_throughput cannot run a {:?}",
            spec.kind
        )));
    }
    spec.validate()?;
    let target = spec.target.expect("validated");
    let pf_target = 1.0 - target;
    let mut rows = Vec::new();
    let mut by_scheme: Vec<(SchemeKind, Vec<(f64, f64)>)> =
        spec.schemes.iter().map(|&s| (s, Vec::new())).collect();

    for &inr_db in &spec.grid {
        let scenario = spec.scenario.with_inr(inr_db).to_scenario()?;
        let floor = scenario.fd_sensing_floor();
        let epsilon = threshold_for_pf(pf_target, scenario.n_s, floor)?;
        let detector = Detector::new(epsilon, scenario.n_s, floor)?;
        let pf = pf_analytic(&detector);
        for (&scheme, points) in spec.schemes.iter().zip(by_scheme.iter_mut().map(|p| &mut p.1)) {
            let tp = throughput(scheme, pf, scenario.n_s, scenario.n_frame);
            let config = TrialConfig::new(
                scenario,
                scheme,
                detector,
                spec.seed,
                TrialConfig::default_horizon(&scenario),
            )?;
            let batch = run_batch(&config, spec.trials)?;
            points.push((inr_db, batch.mean()));
            rows.push(mc_row(
                scheme,
                epsilon,
                pf,
                tp.normalized_throughput,
                &batch,
                spec.trials,
                inr_db.is_finite().then_some(inr_db),
            ));
        }
    }

    let slopes: Vec<SlopeFit> = by_scheme
        .iter()
        .filter_map(|(scheme, pts)| {
            fit_slope(pts).map(|slope_per_db| SlopeFit {
                scheme: *scheme,
                slope_per_db,
            })
        })
        .collect();
    let slope_of = |kind: SchemeKind| {
        slopes
            .iter()
            .find(|s| s.scheme == kind)
            .map(|s| s.slope_per_db)
    };
    let ratio = match (
        slope_of(SchemeKind::SlottedFullDuplex),
        slope_of(SchemeKind::SlidingFullDuplex),
    ) {
        (Some(slotted), Some(sliding)) if sliding != 0.0 => Some(slotted / sliding),
        _ => None,
    };

    let mut metadata = metadata_for(spec);
    metadata.slopes = (!slopes.is_empty()).then_some(slopes);
    metadata.slope_ratio_slotted_over_sliding = ratio;
    Ok(SweepResult { rows, metadata })
}

/// Throughput vs residual self-interference at a fixed average latency:
/// per (INR, scheme), bisect the threshold until the Monte-Carlo mean
/// latency reaches the target within 2% relative. Probes reuse the same
/// per-trial streams (common random numbers), which makes the empirical
/// latency monotone in the threshold. Rows that cannot reach the target
/// are flagged unreachable.
pub fn run_inr_sweep_fixed_latency(spec: &SweepSpec) -> Result<SweepResult> {
    if spec.kind != SweepKind::InrSweepFixedLatency {
        return Err(Error::InvalidSpec(format!(
            "run_inr_sweep_fixed_latency cannot run a {:?}",
            spec.kind
        )));
    }
    spec.validate()?;
    let target = spec.target.expect("validated");
    let tol = LATENCY_TARGET_TOLERANCE * target;
    let mut rows = Vec::new();

    for &inr_db in &spec.grid {
        let scenario = spec.scenario.with_inr(inr_db).to_scenario()?;
        let floor = scenario.fd_sensing_floor();
        for &scheme in &spec.schemes {
            let probe = |epsilon: f64| -> Result<(Detector<f64>, LatencyDistribution<f64>)> {
                let detector = Detector::new(epsilon, scenario.n_s, floor)?;
                let config = TrialConfig::new(
                    scenario,
                    scheme,
                    detector,
                    spec.seed,
                    TrialConfig::default_horizon(&scenario),
                )?;
                Ok((detector, run_batch(&config, spec.trials)?))
            };
            let push_row = |rows: &mut Vec<SweepRow>,
                            detector: &Detector<f64>,
                            batch: &LatencyDistribution<f64>,
                            unreachable: bool| {
                let pf = pf_analytic(detector);
                let tp = throughput(scheme, pf, scenario.n_s, scenario.n_frame);
                let mut row = mc_row(
                    scheme,
                    detector.threshold,
                    pf,
                    tp.normalized_throughput,
                    batch,
                    spec.trials,
                    inr_db.is_finite().then_some(inr_db),
                );
                row.unreachable = unreachable;
                rows.push(row);
            };

            // Latency at eps = 0 is the scheme's floor; a target below it
            // is unreachable.
            let (det_lo, batch_lo) = probe(0.0)?;
            if batch_lo.mean() > target + tol {
                push_row(&mut rows, &det_lo, &batch_lo, true);
                continue;
            }
            if (batch_lo.mean() - target).abs() <= tol {
                push_row(&mut rows, &det_lo, &batch_lo, false);
                continue;
            }

            // Expand until the mean latency crosses the target.
            let mut lo = 0.0;
            let mut hi = floor;
            let mut bracket = None;
            for _ in 0..MAX_BISECTION_PROBES {
                let (det, batch) = probe(hi)?;
                if (batch.mean() - target).abs() <= tol {
                    bracket = Some((det, batch, true));
                    break;
                }
                if batch.mean() > target {
                    bracket = Some((det, batch, false));
                    break;
                }
                lo = hi;
                hi *= 2.0;
            }
            let Some((det, batch, converged_early)) = bracket else {
                let (det, batch) = probe(hi)?;
                push_row(&mut rows, &det, &batch, true);
                continue;
            };
            if converged_early {
                push_row(&mut rows, &det, &batch, false);
                continue;
            }

            let mut best: Option<(Detector<f64>, LatencyDistribution<f64>)> = None;
            for _ in 0..MAX_BISECTION_PROBES {
                let mid = 0.5 * (lo + hi);
                let (det, batch) = probe(mid)?;
                if (batch.mean() - target).abs() <= tol {
                    best = Some((det, batch));
                    break;
                }
                if batch.mean() > target {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            match best {
                Some((det, batch)) => push_row(&mut rows, &det, &batch, false),
                None => {
                    let (det, batch) = probe(0.5 * (lo + hi))?;
                    let reached = (batch.mean() - target).abs() <= tol;
                    push_row(&mut rows, &det, &batch, !reached);
                }
            }
        }
    }

    let mut metadata = metadata_for(spec);
    metadata.search = Some(SearchSettings {
        latency_tolerance: LATENCY_TARGET_TOLERANCE,
        max_probes: MAX_BISECTION_PROBES,
        probe_trials: spec.trials,
    });
    Ok(SweepResult { rows, metadata })
}

/// Dispatch on the spec's kind.
pub fn run(spec: &SweepSpec) -> Result<SweepResult> {
    match spec.kind {
        SweepKind::ThresholdSweep | SweepKind::QuantileSweep => run_threshold_sweep(spec),
        SweepKind::InrSweepFixedThroughput => run_inr_sweep_fixed_throughput(spec),
        SweepKind::InrSweepFixedLatency => run_inr_sweep_fixed_latency(spec),
    }
}

// ---------------------------------------------------------------------------
// Emission
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::InvalidSpec(format!("unknown format '{other}'"))),
        }
    }
}

/// Nine significant digits, scientific notation.
fn sig9(x: f64) -> String {
    format!("{x:.8e}")
}

/// Pinned-format CSV: the exact [`CSV_HEADER`] plus one line per
/// reachable row, reals at nine significant digits. Deterministic given
/// the spec and seed.
pub fn write_csv<W: Write>(result: &SweepResult, mut w: W) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for row in result.rows.iter().filter(|r| !r.unreachable) {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            row.scheme,
            sig9(row.epsilon),
            sig9(row.pf),
            sig9(row.throughput_norm),
            sig9(row.latency_mean),
            sig9(row.latency_p95),
            sig9(row.latency_p99),
            row.trials,
            sig9(row.truncation_rate),
        )?;
    }
    Ok(())
}

/// Full result as pretty JSON (rows plus metadata).
pub fn write_json<W: Write>(result: &SweepResult, mut w: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, result)
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    writeln!(&mut w)?;
    Ok(())
}

/// Write the result to `path` in the requested format.
pub fn emit(result: &SweepResult, path: &Path, format: OutputFormat) -> Result<()> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    match format {
        OutputFormat::Csv => write_csv(result, &mut w)?,
        OutputFormat::Json => write_json(result, &mut w)?,
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_scenario() -> ScenarioSpec {
        ScenarioSpec {
            snr_pu_db: 0.0,
            inr_db: None,
            noise_power: 1.0,
            n_s: 16,
            n_frame: 128,
        }
    }

    fn threshold_spec(trials: u64) -> SweepSpec {
        SweepSpec {
            kind: SweepKind::ThresholdSweep,
            scenario: base_scenario(),
            schemes: vec![
                SchemeKind::HalfDuplex,
                SchemeKind::SlottedFullDuplex,
                SchemeKind::SlidingFullDuplex,
            ],
            grid: vec![0.05, 0.1],
            grid_unit: GridUnit::TargetPf,
            trials,
            seed: SeedSpec::new(31),
            target: None,
        }
    }

    #[test]
    fn validation_rejects_bad_specs() {
        let mut spec = threshold_spec(100);
        spec.grid = vec![];
        assert!(matches!(spec.validate(), Err(Error::InvalidSpec(_))));

        let mut spec = threshold_spec(100);
        spec.grid = vec![0.2, 0.1];
        assert!(spec.validate().is_err());

        let mut spec = threshold_spec(100);
        spec.target = Some(0.9);
        assert!(spec.validate().is_err());

        let mut spec = threshold_spec(0);
        spec.schemes = vec![SchemeKind::SlidingFullDuplex];
        assert!(spec.validate().is_err());

        let mut spec = threshold_spec(100);
        spec.schemes = vec![SchemeKind::HalfDuplex, SchemeKind::HalfDuplex];
        assert!(spec.validate().is_err());

        let mut spec = threshold_spec(100);
        spec.kind = SweepKind::InrSweepFixedThroughput;
        spec.grid_unit = GridUnit::InrDb;
        spec.grid = vec![0.0, 5.0];
        spec.schemes = vec![SchemeKind::SlottedFullDuplex];
        assert!(spec.validate().is_err(), "missing target");
        spec.target = Some(0.9);
        assert!(spec.validate().is_ok());
        spec.schemes = vec![SchemeKind::HalfDuplex];
        assert!(spec.validate().is_err(), "HD in an INR sweep");
    }

    #[test]
    fn threshold_sweep_row_layout() {
        let spec = threshold_spec(400);
        let result = run_threshold_sweep(&spec).unwrap();
        // Per grid point: HD analytic + HD MC + slotted analytic +
        // slotted MC + sliding MC.
        assert_eq!(result.rows.len(), 2 * 5);
        let analytic: Vec<_> = result
            .rows
            .iter()
            .filter(|r| r.source == RowSource::Analytic)
            .collect();
        assert_eq!(analytic.len(), 4);
        for row in &result.rows {
            assert!(row.pf >= 0.0 && row.pf <= 1.0);
            assert!(row.latency_mean >= 1.0);
            let expect = if row.scheme.is_full_duplex() {
                1.0 - row.pf
            } else {
                (128.0 - 16.0) / 128.0 * (1.0 - row.pf)
            };
            assert!((row.throughput_norm - expect).abs() < 1e-12);
            if row.source == RowSource::Analytic {
                assert_eq!(row.trials, 0);
            } else {
                assert_eq!(row.trials, 400);
            }
        }
        // Grid-major, scheme-minor ordering.
        assert!(result.rows[0].pf < result.rows[5].pf + 1e-12);
        assert_eq!(result.metadata.rng, RNG_ALGORITHM);
    }

    #[test]
    fn analytic_only_sweep_without_trials() {
        let mut spec = threshold_spec(0);
        spec.schemes = vec![SchemeKind::HalfDuplex, SchemeKind::SlottedFullDuplex];
        let result = run_threshold_sweep(&spec).unwrap();
        assert_eq!(result.rows.len(), 4);
        assert!(result
            .rows
            .iter()
            .all(|r| r.source == RowSource::Analytic && r.trials == 0));
    }

    #[test]
    fn always_alarm_threshold_row() {
        let spec = SweepSpec {
            kind: SweepKind::ThresholdSweep,
            scenario: base_scenario(),
            schemes: vec![SchemeKind::SlidingFullDuplex],
            grid: vec![0.0],
            grid_unit: GridUnit::Epsilon,
            trials: 200,
            seed: SeedSpec::new(5),
            target: None,
        };
        let result = run_threshold_sweep(&spec).unwrap();
        assert_eq!(result.rows.len(), 1);
        let row = &result.rows[0];
        assert_eq!(row.pf, 1.0);
        assert_eq!(row.throughput_norm, 0.0);
        assert_eq!(row.latency_mean, 1.0);
    }

    #[test]
    fn csv_format_is_pinned() {
        let spec = threshold_spec(50);
        let result = run_threshold_sweep(&spec).unwrap();
        let mut buf = Vec::new();
        write_csv(&result, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER);
        let first = lines.next().unwrap();
        let fields: Vec<&str> = first.split(',').collect();
        assert_eq!(fields.len(), 9);
        assert_eq!(fields[0], "half_duplex");
        // Reals carry nine significant digits.
        assert!(fields[1].contains('e'), "field {}", fields[1]);
        assert_eq!(text.lines().count(), 1 + result.rows.len());
    }

    #[test]
    fn csv_bytes_reproducible() {
        let spec = threshold_spec(300);
        let a = run_threshold_sweep(&spec).unwrap();
        let b = run_threshold_sweep(&spec).unwrap();
        let mut ba = Vec::new();
        let mut bb = Vec::new();
        write_csv(&a, &mut ba).unwrap();
        write_csv(&b, &mut bb).unwrap();
        assert_eq!(ba, bb);
    }

    #[test]
    fn json_round_trips_rows() {
        let spec = threshold_spec(50);
        let result = run_threshold_sweep(&spec).unwrap();
        let mut buf = Vec::new();
        write_json(&result, &mut buf).unwrap();
        let back: SweepResult = serde_json::from_slice(&buf).unwrap();
        assert_eq!(back.rows, result.rows);
        assert_eq!(back.metadata, result.metadata);
    }

    #[test]
    fn fixed_throughput_sweep_fits_slopes() {
        let spec = SweepSpec {
            kind: SweepKind::InrSweepFixedThroughput,
            scenario: base_scenario(),
            schemes: vec![SchemeKind::SlottedFullDuplex, SchemeKind::SlidingFullDuplex],
            grid: vec![0.0, 5.0, 10.0],
            grid_unit: GridUnit::InrDb,
            trials: 4_000,
            seed: SeedSpec::new(17),
            target: Some(0.9),
        };
        let result = run_inr_sweep_fixed_throughput(&spec).unwrap();
        assert_eq!(result.rows.len(), 6);
        for row in &result.rows {
            assert!((row.pf - 0.1).abs() < 1e-9);
            assert!((row.throughput_norm - 0.9).abs() < 1e-9);
            assert!(row.inr_db.is_some());
        }
        let slopes = result.metadata.slopes.as_ref().unwrap();
        assert_eq!(slopes.len(), 2);
        let ratio = result.metadata.slope_ratio_slotted_over_sliding.unwrap();
        assert!(ratio > 1.0, "slotted should degrade faster, ratio {ratio}");
        // Sliding beats slotted at every grid point.
        for inr in [0.0, 5.0, 10.0] {
            let mean_of = |scheme: SchemeKind| {
                result
                    .rows
                    .iter()
                    .find(|r| r.scheme == scheme && r.inr_db == Some(inr))
                    .unwrap()
                    .latency_mean
            };
            assert!(
                mean_of(SchemeKind::SlidingFullDuplex) < mean_of(SchemeKind::SlottedFullDuplex),
                "dominance violated at INR {inr}"
            );
        }
    }

    #[test]
    fn fixed_throughput_perfect_suppression_matches_threshold_sweep() {
        let seed = SeedSpec::new(99);
        let inr_spec = SweepSpec {
            kind: SweepKind::InrSweepFixedThroughput,
            scenario: base_scenario(),
            schemes: vec![SchemeKind::SlottedFullDuplex],
            grid: vec![f64::NEG_INFINITY],
            grid_unit: GridUnit::InrDb,
            trials: 2_000,
            seed,
            target: Some(0.9),
        };
        let inr_result = run_inr_sweep_fixed_throughput(&inr_spec).unwrap();

        let thr_spec = SweepSpec {
            kind: SweepKind::ThresholdSweep,
            scenario: base_scenario(),
            schemes: vec![SchemeKind::SlottedFullDuplex],
            grid: vec![0.1],
            grid_unit: GridUnit::TargetPf,
            trials: 2_000,
            seed,
            target: None,
        };
        let thr_result = run_threshold_sweep(&thr_spec).unwrap();
        let thr_mc = thr_result
            .rows
            .iter()
            .find(|r| r.source == RowSource::MonteCarlo)
            .unwrap();
        let inr_row = &inr_result.rows[0];
        assert_eq!(inr_row.latency_mean, thr_mc.latency_mean);
        assert_eq!(inr_row.epsilon, thr_mc.epsilon);
        assert_eq!(inr_row.inr_db, None);
    }

    #[test]
    fn fixed_latency_reaches_target() {
        let spec = SweepSpec {
            kind: SweepKind::InrSweepFixedLatency,
            scenario: base_scenario(),
            schemes: vec![SchemeKind::SlottedFullDuplex, SchemeKind::SlidingFullDuplex],
            grid: vec![0.0],
            grid_unit: GridUnit::InrDb,
            trials: 4_000,
            seed: SeedSpec::new(23),
            target: Some(16.0),
        };
        let result = run_inr_sweep_fixed_latency(&spec).unwrap();
        assert_eq!(result.rows.len(), 2);
        for row in &result.rows {
            assert!(!row.unreachable, "{row:?}");
            assert!(
                (row.latency_mean - 16.0).abs() <= 0.02 * 16.0 + 1e-9,
                "mean {} missed the target",
                row.latency_mean
            );
        }
        // At the same protection level the sliding scheme affords higher
        // throughput.
        let tp = |scheme: SchemeKind| {
            result
                .rows
                .iter()
                .find(|r| r.scheme == scheme)
                .unwrap()
                .throughput_norm
        };
        assert!(tp(SchemeKind::SlidingFullDuplex) >= tp(SchemeKind::SlottedFullDuplex));
        assert!(result.metadata.search.is_some());
    }

    #[test]
    fn fixed_latency_unreachable_below_minimum() {
        // Slotted latency can never average below (n_s + 1) / 2.
        let spec = SweepSpec {
            kind: SweepKind::InrSweepFixedLatency,
            scenario: base_scenario(),
            schemes: vec![SchemeKind::SlottedFullDuplex],
            grid: vec![0.0],
            grid_unit: GridUnit::InrDb,
            trials: 500,
            seed: SeedSpec::new(3),
            target: Some(2.0),
        };
        let result = run_inr_sweep_fixed_latency(&spec).unwrap();
        assert!(result.rows[0].unreachable);
        assert!(result.all_unreachable());
        // Unreachable rows stay out of the CSV.
        let mut buf = Vec::new();
        write_csv(&result, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1);
    }

    #[test]
    fn fixed_latency_trivial_sliding_target() {
        let spec = SweepSpec {
            kind: SweepKind::InrSweepFixedLatency,
            scenario: base_scenario(),
            schemes: vec![SchemeKind::SlidingFullDuplex],
            grid: vec![0.0],
            grid_unit: GridUnit::InrDb,
            trials: 500,
            seed: SeedSpec::new(3),
            target: Some(1.0),
        };
        let result = run_inr_sweep_fixed_latency(&spec).unwrap();
        let row = &result.rows[0];
        assert!(!row.unreachable);
        assert_eq!(row.epsilon, 0.0);
        assert_eq!(row.pf, 1.0);
        assert_eq!(row.throughput_norm, 0.0);
    }
}
