//! Continuous sorting with a fixed-size carry buffer.
//!
//! The working set is two half-batches: the carry buffer and the incoming
//! batch. Each cycle sorts both together, emits the lower half and keeps the
//! upper half as the next carry. The first batch only fills the carry.
//!
//! Emissions are globally ordered only if every incoming timestamp exceeds
//! everything already emitted. The pairwise check implemented here (min of
//! batch `i` strictly above max of batch `i-2`) guarantees that when batch
//! maxima do not decrease, which is the case for timestamps taken from a
//! common clock. A stream that passes the pairwise check with a shrinking
//! batch maximum can still come out unordered.

use std::fmt;

use thiserror::Error;

use crate::counting::{check_batch_len, sort_frames_with, SortError, SortMode};
use crate::frame::{extract_timestamp, Frame, FrameError, FrameLayout};

/// What to do when a batch breaks the separation constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub enum ViolationPolicy {
    /// Report and keep going.
    #[default]
    Warn,
    /// Reject the batch with [`StreamError::Violation`]; state is unchanged.
    Error,
    /// Report and discard the batch.
    DropBatch,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamConfig {
    pub half_batch: usize,
    pub layout: FrameLayout,
    pub mode: SortMode,
    pub on_violation: ViolationPolicy,
}

impl Default for StreamConfig {
    /// 64-frame half batches (128-frame working set) over the default layout.
    fn default() -> Self {
        StreamConfig {
            half_batch: 64,
            layout: FrameLayout::default(),
            mode: SortMode::Paper,
            on_violation: ViolationPolicy::Warn,
        }
    }
}

impl StreamConfig {
    pub fn new(half_batch: usize, layout: FrameLayout) -> Result<Self, StreamError> {
        let config = StreamConfig {
            half_batch,
            layout,
            ..Default::default()
        };
        config.validate()?;
        Ok(config)
    }

    pub fn with_mode(mut self, mode: SortMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_policy(mut self, policy: ViolationPolicy) -> Self {
        self.on_violation = policy;
        self
    }

    pub fn validate(&self) -> Result<(), StreamError> {
        if self.half_batch == 0 {
            return Err(StreamError::InvalidConfig("half_batch must be at least 1".into()));
        }
        check_batch_len(self.half_batch.saturating_mul(2))?;
        Ok(())
    }

    /// Frames held by the sorter at peak: carry plus one incoming batch.
    pub fn working_set(&self) -> usize {
        2 * self.half_batch
    }
}

/// A breach of the separation constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ViolationReport {
    pub batch_index: u64,
    /// Smallest timestamp in the incoming batch.
    pub offending_min: u32,
    /// Largest timestamp in batch `batch_index - 2`.
    pub required_floor: u32,
}

impl fmt::Display for ViolationReport {
    /// Single-line `key=value` record.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "event=violation batch={} offending_min={} required_floor={}",
            self.batch_index, self.offending_min, self.required_floor
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StreamError {
    #[error("invalid stream configuration: {0}")]
    InvalidConfig(String),
    #[error("expected a batch of {expected} frames, got {got}")]
    BatchSize { expected: usize, got: usize },
    #[error("separation constraint violated: {0}")]
    Violation(ViolationReport),
    #[error(transparent)]
    Sort(#[from] SortError),
}

impl From<FrameError> for StreamError {
    fn from(e: FrameError) -> Self {
        StreamError::Sort(e.into())
    }
}

/// Carry buffer plus the bookkeeping for the separation check.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StreamState {
    carry: Vec<Frame>,
    batch_index: u64,
    /// Max timestamps of batches `batch_index - 2` and `batch_index - 1`.
    recent_max: [Option<u32>; 2],
}

impl StreamState {
    pub fn carry(&self) -> &[Frame] {
        &self.carry
    }

    /// Number of batches accepted so far; also the index of the next batch.
    pub fn batch_index(&self) -> u64 {
        self.batch_index
    }

    pub fn recent_max(&self) -> [Option<u32>; 2] {
        self.recent_max
    }

    /// True until two batches have been accepted.
    pub fn warmup(&self) -> bool {
        self.batch_index < 2
    }

    /// Report iff `batch_min` does not strictly exceed the max of batch `i-2`.
    pub fn check_separation(&self, batch_min: u32) -> Option<ViolationReport> {
        if self.batch_index < 2 {
            return None;
        }
        let floor = self.recent_max[0]?;
        (batch_min <= floor).then_some(ViolationReport {
            batch_index: self.batch_index,
            offending_min: batch_min,
            required_floor: floor,
        })
    }
}

/// Counters sampled by the sorter; read them at batch boundaries.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StreamStats {
    pub batches_pushed: u64,
    pub batches_dropped: u64,
    pub frames_in: u64,
    pub frames_out: u64,
    pub violations: u64,
    /// Largest number of frames handed to a single sort.
    pub peak_working_frames: usize,
    /// Largest histogram allocated by a single sort.
    pub peak_histogram_counters: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PushOutcome {
    pub emitted: Vec<Frame>,
    pub violations: Vec<ViolationReport>,
}

/// Owns one stream's configuration, state and counters.
#[derive(Debug, Clone)]
pub struct ContinuousSorter {
    config: StreamConfig,
    state: StreamState,
    stats: StreamStats,
}

impl ContinuousSorter {
    pub fn new(config: StreamConfig) -> Result<Self, StreamError> {
        config.validate()?;
        Ok(ContinuousSorter {
            state: StreamState {
                carry: Vec::with_capacity(config.half_batch),
                ..Default::default()
            },
            config,
            stats: StreamStats::default(),
        })
    }

    pub fn config(&self) -> &StreamConfig {
        &self.config
    }

    pub fn state(&self) -> &StreamState {
        &self.state
    }

    pub fn stats(&self) -> &StreamStats {
        &self.stats
    }

    /// Frames currently held between calls.
    pub fn live_frames(&self) -> usize {
        self.state.carry.len()
    }

    pub fn check_separation(&self, batch_min: u32) -> Option<ViolationReport> {
        self.state.check_separation(batch_min)
    }

    /// Accepts exactly `half_batch` frames.
    ///
    /// The first batch is sorted into the carry and nothing is emitted. Later
    /// batches are merged with the carry; the lower half is emitted.
    pub fn push_batch(&mut self, batch: Vec<Frame>) -> Result<PushOutcome, StreamError> {
        if batch.len() != self.config.half_batch {
            return Err(StreamError::BatchSize {
                expected: self.config.half_batch,
                got: batch.len(),
            });
        }
        let layout = self.config.layout;
        let (min, max) = timestamp_range(&batch, &layout)?.expect("half_batch >= 1");

        let mut violations = Vec::new();
        if let Some(report) = self.state.check_separation(min) {
            self.stats.violations += 1;
            match self.config.on_violation {
                ViolationPolicy::Warn => violations.push(report),
                ViolationPolicy::Error => return Err(StreamError::Violation(report)),
                ViolationPolicy::DropBatch => {
                    self.stats.batches_dropped += 1;
                    return Ok(PushOutcome {
                        emitted: Vec::new(),
                        violations: vec![report],
                    });
                }
            }
        }

        let mut working = std::mem::take(&mut self.state.carry);
        let frames_in = batch.len() as u64;
        working.extend(batch);
        let mut sorted = self.sort(working)?;

        let emitted = if self.state.batch_index == 0 {
            self.state.carry = sorted;
            Vec::new()
        } else {
            self.state.carry = sorted.split_off(self.config.half_batch);
            sorted
        };

        self.state.batch_index += 1;
        self.state.recent_max = [self.state.recent_max[1], Some(max)];
        self.stats.batches_pushed += 1;
        self.stats.frames_in += frames_in;
        self.stats.frames_out += emitted.len() as u64;
        Ok(PushOutcome { emitted, violations })
    }

    /// Emits the carry in order and resets to a fresh stream.
    pub fn flush(&mut self) -> Vec<Frame> {
        let carry = std::mem::take(&mut self.state.carry);
        self.state = StreamState::default();
        self.stats.frames_out += carry.len() as u64;
        // the carry is already ordered: it is the upper half of the last sort
        carry
    }

    /// End of stream with a final batch shorter than `half_batch`: the
    /// remainder is sorted together with the carry and everything is emitted.
    /// The remainder is not subject to the separation check.
    pub fn flush_with(&mut self, remainder: Vec<Frame>) -> Result<Vec<Frame>, StreamError> {
        if remainder.len() > self.config.half_batch {
            return Err(StreamError::BatchSize {
                expected: self.config.half_batch,
                got: remainder.len(),
            });
        }
        if remainder.is_empty() {
            return Ok(self.flush());
        }
        for f in &remainder {
            self.config.layout.check(f)?;
        }
        self.stats.frames_in += remainder.len() as u64;
        let mut working = std::mem::take(&mut self.state.carry);
        working.extend(remainder);
        self.state.carry = self.sort(working)?;
        Ok(self.flush())
    }

    fn sort(&mut self, working: Vec<Frame>) -> Result<Vec<Frame>, StreamError> {
        self.stats.peak_working_frames = self.stats.peak_working_frames.max(working.len());
        self.stats.peak_histogram_counters = self.stats.peak_histogram_counters.max(self.config.layout.key_space());
        Ok(sort_frames_with(working, &self.config.layout, self.config.mode)?.into_vec())
    }
}

/// `(min, max)` timestamp of `frames`, or `None` when empty.
pub fn timestamp_range(frames: &[Frame], layout: &FrameLayout) -> Result<Option<(u32, u32)>, FrameError> {
    let mut range: Option<(u32, u32)> = None;
    for f in frames {
        let ts = extract_timestamp(f, layout)?;
        range = Some(match range {
            None => (ts, ts),
            Some((lo, hi)) => (lo.min(ts), hi.max(ts)),
        });
    }
    Ok(range)
}
