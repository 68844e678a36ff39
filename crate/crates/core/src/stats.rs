//! Empirical summaries of Monte-Carlo sample sets: arithmetic mean and
//! nearest-rank quantiles.

use crate::error::{Error, Result};
use crate::num::Real;

/// Mean and quantiles of a sample set.
///
/// Quantiles follow the nearest-rank rule: the level-`p` quantile of `n`
/// samples is the `ceil(p * n)`-th order statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalSummary<T> {
    pub mean: T,
    pub count: usize,
    quantiles: Vec<(f64, T)>,
}

impl<T: Real> EmpiricalSummary<T> {
    /// Quantile at `level`, if it was requested when summarizing.
    pub fn quantile(&self, level: f64) -> Option<T> {
        self.quantiles
            .iter()
            .find(|(l, _)| *l == level)
            .map(|(_, v)| *v)
    }

    /// All stored (level, value) pairs, ordered by level.
    pub fn quantiles(&self) -> &[(f64, T)] {
        &self.quantiles
    }
}

/// Nearest-rank index (1-based) for level `p` over `n` samples, robust to
/// the floating-point representation of `p * n` landing a hair above an
/// integer (e.g. 0.2 * 5).
fn nearest_rank(p: f64, n: usize) -> usize {
    let pn = p * n as f64;
    let rank = if (pn - pn.round()).abs() < 1e-9 * n as f64 {
        pn.round()
    } else {
        pn.ceil()
    };
    (rank as usize).clamp(1, n)
}

/// Summarize `samples` with the arithmetic mean and nearest-rank quantiles
/// at each of `levels` (each strictly inside (0, 1)).
pub fn summarize<T: Real>(samples: &[T], levels: &[f64]) -> Result<EmpiricalSummary<T>> {
    if samples.is_empty() {
        return Err(Error::domain("summarize requires a non-empty sample set"));
    }
    for &l in levels {
        if !(l > 0.0 && l < 1.0) {
            return Err(Error::domain(format!(
                "quantile level must lie in (0, 1), got {l}"
            )));
        }
    }
    let n = samples.len();
    let mean = samples.iter().copied().sum::<T>() / T::of(n as f64);

    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("samples must not contain NaN"));

    let mut quantiles: Vec<(f64, T)> = levels
        .iter()
        .map(|&p| (p, sorted[nearest_rank(p, n) - 1]))
        .collect();
    quantiles.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    Ok(EmpiricalSummary {
        mean,
        count: n,
        quantiles,
    })
}
