//! `crlab` — command-line driver for the sensing-scheme latency and
//! throughput experiments.
//!
//! Exit codes: 0 success, 2 I/O failure, 64 usage error, 65 invalid data
//! (e.g. a latency target no operating point can reach).

use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use crlab_core::latency::SchemeKind;
use crlab_core::seed::SeedSpec;
use crlab_core::sweep::{
    self, GridUnit, OutputFormat, ScenarioSpec, SweepKind, SweepResult, SweepSpec,
};
use crlab_core::Error as CoreError;

const EXIT_IO: i32 = 2;
const EXIT_USAGE: i32 = 64;
const EXIT_DATA: i32 = 65;

#[derive(Parser)]
#[command(
    name = "crlab",
    version,
    about = "Access-latency and throughput experiments for half-duplex, slotted and sliding-window spectrum sensing"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Latency/throughput rows over a detection-threshold grid
    ThresholdSweep(SweepArgs),
    /// Threshold sweep reported with 95%/99% latency quantiles
    Quantiles(SweepArgs),
    /// Average access-latency vs residual self-interference at a fixed
    /// normalized throughput (default target 0.9)
    InrLatency(SweepArgs),
    /// Normalized throughput vs residual self-interference at a fixed
    /// average access-latency in samples (default target 16)
    InrThroughput(SweepArgs),
}

#[derive(Args)]
struct SweepArgs {
    /// Sensing window length in samples
    #[arg(long)]
    ns: Option<usize>,

    /// SU frame length in samples
    #[arg(long)]
    n: Option<usize>,

    /// Primary-user SNR over the noise floor, dB
    #[arg(long = "snr-db", allow_hyphen_values = true)]
    snr_db: Option<f64>,

    /// Residual self-interference over the noise floor, dB: a value, a
    /// range "a:b:step", or "none" for perfect suppression. Repeatable;
    /// forms the grid for the INR sweeps, and the (single) scenario value
    /// for threshold sweeps.
    #[arg(long = "inr-db", allow_hyphen_values = true)]
    inr_db: Vec<String>,

    /// Detection-threshold grid: a value or a range "a:b:step"; repeatable
    #[arg(long, allow_hyphen_values = true)]
    epsilon: Vec<String>,

    /// False-alarm-probability grid, calibrating each scheme on its own
    /// sensing floor (alternative to --epsilon)
    #[arg(long)]
    pf: Vec<String>,

    /// Monte-Carlo trials per operating point (0 = analytic rows only)
    #[arg(long)]
    trials: Option<u64>,

    /// Master seed of the deterministic per-trial random streams
    #[arg(long)]
    seed: Option<u64>,

    /// Comma-separated schemes: hd|half_duplex, slotted|slotted_full_duplex,
    /// sliding|sliding_full_duplex
    #[arg(long)]
    schemes: Option<String>,

    /// Normalized-throughput target (inr-latency) or latency target in
    /// samples (inr-throughput)
    #[arg(long)]
    target: Option<f64>,

    /// Output path; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,

    /// Output format: csv (default) or json
    #[arg(long)]
    format: Option<String>,

    /// JSON file holding a full sweep specification; explicit flags
    /// override its fields
    #[arg(long)]
    config: Option<PathBuf>,
}

struct CliError {
    code: i32,
    message: String,
}

fn usage(message: impl Into<String>) -> CliError {
    CliError {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let code = match &e {
            CoreError::Io(_) => EXIT_IO,
            CoreError::InvalidSpec(_) | CoreError::Domain(_) => EXIT_USAGE,
            CoreError::Unreachable(_)
            | CoreError::Consistency(_)
            | CoreError::Divergence
            | CoreError::NonConvergence { .. } => EXIT_DATA,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return code;
        }
    };
    let (kind, args) = match cli.command {
        Command::ThresholdSweep(a) => (SweepKind::ThresholdSweep, a),
        Command::Quantiles(a) => (SweepKind::QuantileSweep, a),
        Command::InrLatency(a) => (SweepKind::InrSweepFixedThroughput, a),
        Command::InrThroughput(a) => (SweepKind::InrSweepFixedLatency, a),
    };
    match execute(kind, &args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("crlab: {}", e.message);
            e.code
        }
    }
}

fn execute(kind: SweepKind, args: &SweepArgs) -> Result<i32, CliError> {
    let spec = build_spec(kind, args)?;
    let result = sweep::run(&spec)?;

    let format = match &args.format {
        Some(f) => OutputFormat::from_str(f).map_err(|e| usage(e.to_string()))?,
        None => OutputFormat::Csv,
    };
    emit(&result, args.out.as_deref(), format)?;

    if result.all_unreachable() {
        eprintln!("crlab: the target {:?} was unreachable on every row", spec.target);
        return Ok(EXIT_DATA);
    }
    Ok(0)
}

fn emit(
    result: &SweepResult,
    out: Option<&std::path::Path>,
    format: OutputFormat,
) -> Result<(), CliError> {
    match out {
        Some(path) => sweep::emit(result, path, format).map_err(CliError::from),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            let io_err = |e: std::io::Error| CliError {
                code: EXIT_IO,
                message: e.to_string(),
            };
            match format {
                OutputFormat::Csv => sweep::write_csv(result, &mut lock).map_err(io_err)?,
                OutputFormat::Json => sweep::write_json(result, &mut lock)?,
            }
            lock.flush().map_err(io_err)
        }
    }
}

fn build_spec(kind: SweepKind, args: &SweepArgs) -> Result<SweepSpec, CliError> {
    let mut spec = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
            let mut spec: SweepSpec = serde_json::from_str(&text)
                .map_err(|e| usage(format!("bad config {}: {e}", path.display())))?;
            spec.kind = kind; // the subcommand decides what runs
            spec
        }
        None => SweepSpec {
            kind,
            scenario: ScenarioSpec {
                snr_pu_db: 0.0,
                inr_db: None,
                noise_power: 1.0,
                n_s: 16,
                n_frame: 128,
            },
            schemes: default_schemes(kind),
            grid: Vec::new(),
            grid_unit: GridUnit::Epsilon,
            trials: 100_000,
            seed: SeedSpec::new(42),
            target: default_target(kind),
        },
    };

    if let Some(ns) = args.ns {
        spec.scenario.n_s = ns;
    }
    if let Some(n) = args.n {
        spec.scenario.n_frame = n;
    }
    if let Some(snr) = args.snr_db {
        spec.scenario.snr_pu_db = snr;
    }
    if let Some(trials) = args.trials {
        spec.trials = trials;
    }
    if let Some(seed) = args.seed {
        spec.seed = SeedSpec::new(seed);
    }
    if let Some(target) = args.target {
        spec.target = Some(target);
    }
    if let Some(schemes) = &args.schemes {
        spec.schemes = parse_schemes(schemes)?;
    }

    let epsilon = parse_grid(&args.epsilon)?;
    let pf = parse_grid(&args.pf)?;
    let inr = parse_grid(&args.inr_db)?;

    match kind {
        SweepKind::ThresholdSweep | SweepKind::QuantileSweep => {
            match (epsilon.is_empty(), pf.is_empty()) {
                (false, false) => {
                    return Err(usage("--epsilon and --pf are mutually exclusive"));
                }
                (false, true) => {
                    spec.grid = epsilon;
                    spec.grid_unit = GridUnit::Epsilon;
                }
                (true, false) => {
                    spec.grid = pf;
                    spec.grid_unit = GridUnit::TargetPf;
                }
                (true, true) if spec.grid.is_empty() => {
                    return Err(usage(
                        "a threshold grid is required: --epsilon, --pf, or a config file",
                    ));
                }
                _ => {} // grid came from the config file
            }
            match inr.len() {
                0 => {}
                1 => {
                    spec.scenario.inr_db = inr[0].is_finite().then_some(inr[0]);
                }
                _ => {
                    return Err(usage(
                        "threshold sweeps take a single --inr-db scenario value",
                    ));
                }
            }
        }
        SweepKind::InrSweepFixedThroughput | SweepKind::InrSweepFixedLatency => {
            if !epsilon.is_empty() || !pf.is_empty() {
                return Err(usage("--epsilon/--pf do not apply to INR sweeps"));
            }
            if !inr.is_empty() {
                spec.grid = inr;
            } else if spec.grid.is_empty() {
                spec.grid = (0..=10).map(f64::from).collect();
            }
            spec.grid_unit = GridUnit::InrDb;
        }
    }

    spec.validate()?;
    Ok(spec)
}

fn default_schemes(kind: SweepKind) -> Vec<SchemeKind> {
    match kind {
        SweepKind::ThresholdSweep | SweepKind::QuantileSweep => SchemeKind::ALL.to_vec(),
        _ => vec![SchemeKind::SlottedFullDuplex, SchemeKind::SlidingFullDuplex],
    }
}

fn default_target(kind: SweepKind) -> Option<f64> {
    match kind {
        SweepKind::InrSweepFixedThroughput => Some(0.9),
        SweepKind::InrSweepFixedLatency => Some(16.0),
        _ => None,
    }
}

fn parse_schemes(input: &str) -> Result<Vec<SchemeKind>, CliError> {
    input
        .split(',')
        .map(|s| SchemeKind::from_str(s.trim()).map_err(|e| usage(e.to_string())))
        .collect()
}

/// Each item is a number, "none"/"-inf" (perfect suppression), or an
/// inclusive range "a:b:step".
fn parse_grid(items: &[String]) -> Result<Vec<f64>, CliError> {
    let mut values = Vec::new();
    for item in items {
        for part in item.split(',').filter(|p| !p.trim().is_empty()) {
            let part = part.trim();
            if let Some(range) = parse_range(part)? {
                values.extend(range);
            } else {
                values.push(parse_value(part)?);
            }
        }
    }
    Ok(values)
}

fn parse_value(part: &str) -> Result<f64, CliError> {
    match part {
        "none" | "-inf" => Ok(f64::NEG_INFINITY),
        _ => part
            .parse::<f64>()
            .map_err(|_| usage(format!("cannot parse '{part}' as a number"))),
    }
}

fn parse_range(part: &str) -> Result<Option<Vec<f64>>, CliError> {
    let pieces: Vec<&str> = part.split(':').collect();
    match pieces.len() {
        1 => Ok(None),
        3 => {
            let start = parse_value(pieces[0])?;
            let stop = parse_value(pieces[1])?;
            let step = parse_value(pieces[2])?;
            if !(step > 0.0) || !start.is_finite() || stop < start {
                return Err(usage(format!("bad range '{part}' (want a:b:step, step > 0)")));
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize;
            Ok(Some((0..=count).map(|i| start + i as f64 * step).collect()))
        }
        _ => Err(usage(format!("bad range '{part}' (want a:b:step)"))),
    }
}
