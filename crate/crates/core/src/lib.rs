//! Bounded-memory continuous sorting of fixed-width, timestamped frames.
//!
//! Frames are ordered by a timestamp bit field using a counting sort
//! ([`counting`]). For unbounded streams, [`stream::ContinuousSorter`] keeps
//! a carry buffer of `half_batch` frames: each incoming batch is sorted
//! together with the carry, the lower half is emitted and the upper half is
//! carried into the next cycle. The working set never exceeds
//! `2 * half_batch` frames plus `2^ts_width` histogram counters.
//!
//! ```
//! use framesort::{ContinuousSorter, Frame, FrameLayout, StreamConfig};
//!
//! let layout = FrameLayout::default(); // 48-bit frames, timestamp at bits 16..24
//! let frame = |ts: u64| Frame::new(vec![0xAAAA, ts, 0x5555]);
//!
//! let mut sorter = ContinuousSorter::new(StreamConfig::new(3, layout).unwrap()).unwrap();
//! assert!(sorter.push_batch(vec![frame(5), frame(1), frame(3)]).unwrap().emitted.is_empty());
//! let out = sorter.push_batch(vec![frame(2), frame(6), frame(4)]).unwrap();
//! assert_eq!(out.emitted, vec![frame(1), frame(2), frame(3)]);
//! assert_eq!(sorter.flush(), vec![frame(4), frame(5), frame(6)]);
//! ```
//!
//! Runnable walkthroughs live in the crate's `examples/` directory.

pub mod bench;
pub mod cli;
pub mod counting;
pub mod frame;
pub mod generator;
pub mod io;
pub mod stream;

pub use counting::{
    build_histogram, place_keys, prefix_sums, scatter_words, sort_frames, sort_frames_with, sort_keys, sort_keys_with,
    CumulativeRanks, Histogram, SortError, SortMode, SortedOutput,
};
pub use frame::{
    decode_frame, encode_frame, extract_timestamp, format_hex_frame, parse_hex_frame, Frame, FrameError, FrameLayout,
};
pub use generator::{generate, GenError, GenParams};
pub use io::{read_batches, serve, Diagnostics, FrameFormat, FrameSink, FrameSource, IoStreamError, Server};
pub use stream::{
    ContinuousSorter, PushOutcome, StreamConfig, StreamError, StreamState, StreamStats, ViolationPolicy,
    ViolationReport,
};
