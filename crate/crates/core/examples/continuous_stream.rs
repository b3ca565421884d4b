//! Push batches through the carry-buffer sorter and watch what each cycle emits.
//!
//! ```bash
//! cargo run --example continuous_stream
//! ```

use framesort::{extract_timestamp, generate, ContinuousSorter, Frame, FrameLayout, GenParams, StreamConfig};

fn stamps(frames: &[Frame], layout: &FrameLayout) -> Vec<u32> {
    frames.iter().map(|f| extract_timestamp(f, layout).unwrap()).collect()
}

fn main() {
    let layout = FrameLayout::default();
    let params = GenParams {
        batches: 8,
        half_batch: 4,
        seed: 11,
        spread: 6,
        layout,
    };
    let mut sorter = ContinuousSorter::new(StreamConfig::new(params.half_batch, layout).unwrap()).unwrap();

    let mut all = Vec::new();
    for (i, batch) in generate(&params).unwrap().into_iter().enumerate() {
        let incoming = stamps(&batch, &layout);
        let out = sorter.push_batch(batch).unwrap();
        println!(
            "batch {i}: in {:?} -> out {:?}, carry {:?}",
            incoming,
            stamps(&out.emitted, &layout),
            stamps(sorter.state().carry(), &layout)
        );
        all.extend(out.emitted);
    }
    let tail = sorter.flush();
    println!("flush: {:?}", stamps(&tail, &layout));
    all.extend(tail);

    let ts = stamps(&all, &layout);
    assert!(ts.windows(2).all(|w| w[0] <= w[1]));
    println!("{} frames out, globally ordered", ts.len());
}
