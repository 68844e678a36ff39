//! Incremental trailing-window energy metric: the FIFO buffer behind the
//! sliding full-duplex scheme. One new sample power enters, the oldest
//! leaves, and the running sum is periodically recomputed so float drift
//! stays far below decision relevance.

use num_complex::Complex;

use crate::detector::Detector;
use crate::error::{Error, Result};
use crate::num::Real;

/// Recompute the running sum from the buffer once per this many pushes.
const RESYNC_INTERVAL: u32 = 1 << 16;

/// Fixed-length window of sample powers with an O(1) running-sum metric.
#[derive(Debug, Clone)]
pub struct SlidingWindow<T> {
    buf: Vec<T>,
    head: usize,
    filled: usize,
    sum: T,
    pushes: u32,
}

impl<T: Real> SlidingWindow<T> {
    pub fn new(n_s: usize) -> Self {
        assert!(n_s >= 1, "window length must be >= 1");
        Self {
            buf: vec![T::zero(); n_s],
            head: 0,
            filled: 0,
            sum: T::zero(),
            pushes: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.filled == 0
    }

    /// The window has seen at least `n_s` samples.
    pub fn is_warm(&self) -> bool {
        self.filled == self.buf.len()
    }

    /// Push one sample power; once warm, returns the windowed mean power.
    pub fn push(&mut self, power: T) -> Option<T> {
        let evicted = self.buf[self.head];
        self.buf[self.head] = power;
        self.head = (self.head + 1) % self.buf.len();
        if self.is_warm() {
            self.sum = self.sum + power - evicted;
        } else {
            self.sum = self.sum + power;
            self.filled += 1;
        }
        self.pushes += 1;
        if self.pushes >= RESYNC_INTERVAL {
            self.resync();
        }
        self.metric()
    }

    /// Current windowed mean power, if warm.
    pub fn metric(&self) -> Option<T> {
        if self.is_warm() {
            Some(self.sum / T::of(self.buf.len() as f64))
        } else {
            None
        }
    }

    fn resync(&mut self) {
        self.sum = self.buf.iter().copied().sum();
        self.pushes = 0;
    }
}

/// Per-sample decisions over the trailing `n_s`-sample window of `stream`:
/// decision `i` (1-based, `i >= n_s`) uses samples `[i - n_s + 1, i]`.
/// Returns `stream.len() - n_s + 1` decisions.
pub fn sliding_decision_stream<T: Real>(
    stream: &[Complex<T>],
    detector: &Detector<T>,
) -> Result<Vec<bool>> {
    if stream.len() < detector.n_s {
        return Err(Error::domain(format!(
            "stream of {} samples is shorter than the window ({})",
            stream.len(),
            detector.n_s
        )));
    }
    let mut window = SlidingWindow::new(detector.n_s);
    Ok(stream
        .iter()
        .filter_map(|c| window.push(c.norm_sqr()))
        .map(|metric| detector.decide(metric))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::SeedSpec;
    use rand::Rng;

    fn brute_force_decisions(stream: &[Complex<f64>], det: &Detector<f64>) -> Vec<bool> {
        (det.n_s..=stream.len())
            .map(|end| {
                let sum: f64 = stream[end - det.n_s..end].iter().map(|c| c.norm_sqr()).sum();
                det.decide(sum / det.n_s as f64)
            })
            .collect()
    }

    #[test]
    fn constant_unit_stream_always_detects() {
        let det = Detector::new(0.5f64, 16, 1.0).unwrap();
        let stream = vec![Complex::new(1.0, 0.0); 64];
        let decisions = sliding_decision_stream(&stream, &det).unwrap();
        assert_eq!(decisions.len(), 64 - 16 + 1);
        assert!(decisions.iter().all(|&d| d));
    }

    #[test]
    fn zero_stream_never_detects() {
        let det = Detector::new(0.5f64, 16, 1.0).unwrap();
        let stream = vec![Complex::new(0.0, 0.0); 40];
        let decisions = sliding_decision_stream(&stream, &det).unwrap();
        assert!(decisions.iter().all(|&d| !d));
    }

    #[test]
    fn short_stream_is_a_domain_error() {
        let det = Detector::new(0.5f64, 16, 1.0).unwrap();
        let stream = vec![Complex::new(1.0, 0.0); 15];
        assert!(sliding_decision_stream(&stream, &det).is_err());
    }

    #[test]
    fn incremental_matches_brute_force() {
        // Lengths chosen to cross the resync boundary as well.
        for (seed, len) in [(1u64, 16usize), (2, 17), (3, 200), (4, 5_000), (5, 70_000)] {
            let mut rng = SeedSpec::new(seed).rng();
            let stream: Vec<Complex<f64>> = (0..len)
                .map(|_| {
                    let power: f64 = rng.random_range(0.5..2.0);
                    crate::sim::complex_gaussian(&mut rng, power)
                })
                .collect();
            let det = Detector::new(1.1f64, 16, 1.0).unwrap();
            let incremental = sliding_decision_stream(&stream, &det).unwrap();
            let brute = brute_force_decisions(&stream, &det);
            assert_eq!(incremental, brute, "mismatch at seed {seed}, len {len}");
        }
    }

    #[test]
    fn running_sum_drift_is_negligible() {
        let mut rng = SeedSpec::new(9).rng();
        let mut window = SlidingWindow::new(16);
        let mut recent = [0.0f64; 16];
        for i in 0..2_000_000usize {
            let p: f64 = rng.random_range(0.0..4.0);
            recent[i % 16] = p;
            let metric = window.push(p);
            if i >= 16 && i % 250_000 == 0 {
                let direct: f64 = recent.iter().sum::<f64>() / 16.0;
                let m = metric.unwrap();
                assert!(
                    ((m - direct) / direct).abs() <= 1e-9,
                    "drift at sample {i}: incremental {m}, direct {direct}"
                );
            }
        }
    }
}
