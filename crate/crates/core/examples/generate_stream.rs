//! Print a small constraint-satisfying stream in the hex text format, one
//! batch per comment block.
//!
//! ```bash
//! cargo run --example generate_stream > stream.hex
//! ```

use std::io::stdout;

use framesort::{generate, FrameFormat, FrameLayout, FrameSink, GenParams};

fn main() {
    let params = GenParams {
        batches: 4,
        half_batch: 4,
        seed: 2024,
        spread: 4,
        layout: FrameLayout::default(),
    };
    println!(
        "# {} batches x {} frames, max timestamp {}",
        params.batches,
        params.half_batch,
        params.max_timestamp()
    );
    let mut sink = FrameSink::new(stdout().lock(), FrameFormat::Hex, params.layout).unwrap();
    for (i, batch) in generate(&params).unwrap().iter().enumerate() {
        sink.flush().unwrap();
        println!("# batch {i}");
        sink.write_all(batch).unwrap();
    }
    sink.flush().unwrap();
}
