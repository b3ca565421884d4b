//! Per-batch latency measurement for the continuous sorter.
//!
//! Streams are generated up front and only `push_batch` is timed. The
//! stream-length comparison runs a short stream of `batches` batches and a
//! long one of `10 * batches`, and reports the ratio of mean per-batch
//! latencies (long / short).

use std::time::{Duration, Instant};

use crate::counting::SortMode;
use crate::frame::{Frame, FrameLayout};
use crate::generator::{generate_wrapping, GenError, GenParams};
use crate::stream::{ContinuousSorter, StreamConfig, StreamError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BenchConfig {
    pub half_batch: usize,
    pub layout: FrameLayout,
    pub mode: SortMode,
    /// Length of the short stream; the long stream is ten times longer.
    pub batches: u64,
    pub repetitions: usize,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            half_batch: 64,
            layout: FrameLayout::default(),
            mode: SortMode::Paper,
            batches: 1000,
            repetitions: 3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub short_batches: u64,
    pub long_batches: u64,
    /// Mean per-batch latency of each repetition, short stream.
    pub short_means: Vec<Duration>,
    pub long_means: Vec<Duration>,
    /// `long / short` for each repetition.
    pub ratios: Vec<f64>,
}

impl BenchReport {
    pub fn median_ratio(&self) -> f64 {
        median(&self.ratios)
    }

    pub fn median_short(&self) -> Duration {
        Duration::from_secs_f64(median(
            &self.short_means.iter().map(Duration::as_secs_f64).collect::<Vec<_>>(),
        ))
    }

    pub fn median_long(&self) -> Duration {
        Duration::from_secs_f64(median(
            &self.long_means.iter().map(Duration::as_secs_f64).collect::<Vec<_>>(),
        ))
    }
}

fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        (v[mid - 1] + v[mid]) / 2.0
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error(transparent)]
    Stream(#[from] StreamError),
}

fn stream_for(config: &BenchConfig, batches: u64, seed: u64) -> Result<Vec<Vec<Frame>>, GenError> {
    // timing does not depend on ordering, so the window is allowed to wrap
    generate_wrapping(&GenParams {
        batches,
        half_batch: config.half_batch,
        seed,
        spread: 2,
        layout: config.layout,
    })
}

/// Mean wall time of one `push_batch` over the given stream.
pub fn mean_push_latency(config: &BenchConfig, stream: Vec<Vec<Frame>>) -> Result<Duration, StreamError> {
    let n = stream.len() as u32;
    let stream_config = StreamConfig::new(config.half_batch, config.layout)?.with_mode(config.mode);
    let mut sorter = ContinuousSorter::new(stream_config)?;
    let start = Instant::now();
    for batch in stream {
        let out = sorter.push_batch(batch)?;
        std::hint::black_box(&out);
    }
    let elapsed = start.elapsed();
    Ok(if n == 0 { Duration::ZERO } else { elapsed / n })
}

/// Mean per-batch latency for a stream of `batches` batches, median over repetitions.
pub fn measure_latency(config: &BenchConfig, batches: u64) -> Result<Duration, BenchError> {
    let mut means = Vec::with_capacity(config.repetitions.max(1));
    for rep in 0..config.repetitions.max(1) {
        let stream = stream_for(config, batches, config.seed.wrapping_add(rep as u64))?;
        means.push(mean_push_latency(config, stream)?.as_secs_f64());
    }
    Ok(Duration::from_secs_f64(median(&means)))
}

/// Short-vs-long stream comparison.
pub fn run(config: &BenchConfig) -> Result<BenchReport, BenchError> {
    let short_batches = config.batches.max(1);
    let long_batches = short_batches * 10;
    // warm caches and the allocator before the first timed run
    mean_push_latency(config, stream_for(config, short_batches.min(100), config.seed)?)?;

    let mut report = BenchReport {
        short_batches,
        long_batches,
        short_means: Vec::new(),
        long_means: Vec::new(),
        ratios: Vec::new(),
    };
    for rep in 0..config.repetitions.max(1) {
        let seed = config.seed.wrapping_add(rep as u64);
        let short = mean_push_latency(config, stream_for(config, short_batches, seed)?)?;
        let long = mean_push_latency(config, stream_for(config, long_batches, seed)?)?;
        report.short_means.push(short);
        report.long_means.push(long);
        report
            .ratios
            .push(long.as_secs_f64() / short.as_secs_f64().max(f64::MIN_POSITIVE));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_of_odd_and_even() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&[]).is_nan());
    }

    #[test]
    fn small_run_reports_every_repetition() {
        let config = BenchConfig {
            half_batch: 4,
            batches: 10,
            repetitions: 2,
            ..Default::default()
        };
        let report = run(&config).unwrap();
        assert_eq!(report.short_batches, 10);
        assert_eq!(report.long_batches, 100);
        assert_eq!(report.ratios.len(), 2);
        assert!(report.median_ratio() > 0.0);
    }
}
