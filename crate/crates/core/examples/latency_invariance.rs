//! Per-batch latency against stream length, half-batch size and key width.
//! Run with `--release` for meaningful numbers.
//!
//! ```bash
//! cargo run --release --example latency_invariance
//! ```

use framesort::bench::{self, measure_latency, BenchConfig};
use framesort::FrameLayout;

fn main() {
    let config = BenchConfig::default();
    let report = bench::run(&config).unwrap();
    println!(
        "L={} vs 10L: {:?} vs {:?} per batch, median ratio {:.3}",
        report.short_batches,
        report.median_short(),
        report.median_long(),
        report.median_ratio()
    );

    for half_batch in [64, 512] {
        let c = BenchConfig { half_batch, ..config };
        println!(
            "half_batch {half_batch:>4}: {:?} per batch",
            measure_latency(&c, 500).unwrap()
        );
    }
    for ts_width in [8, 16] {
        let c = BenchConfig {
            layout: FrameLayout::new(48, 16, 16, ts_width).unwrap(),
            ..config
        };
        println!(
            "ts_width {ts_width:>2}:     {:?} per batch",
            measure_latency(&c, 500).unwrap()
        );
    }
}
