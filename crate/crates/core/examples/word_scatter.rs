//! Word-level scatter over a flat buffer of 16-bit words versus whole-frame
//! sorting: both produce the same word sequence.
//!
//! ```bash
//! cargo run --example word_scatter
//! ```

use framesort::{scatter_words, sort_frames, Frame, FrameLayout, SortMode};

fn main() {
    let layout = FrameLayout::default();
    let words: Vec<u64> = vec![
        0x0A00, 0x0005, 0x0B00, //
        0x0A01, 0x0002, 0x0B01, //
        0x0A02, 0x0007, 0x0B02, //
        0x0A03, 0x0002, 0x0B03,
    ];
    let scattered = scatter_words(&words, &layout, SortMode::Paper).unwrap();
    for (c, chunk) in scattered.chunks(3).enumerate() {
        let c = c + 1;
        println!("slot {c}: D1[{}..={}] = {:04X?}", 3 * c - 2, 3 * c, chunk);
    }

    let frames: Vec<Frame> = words.chunks(3).map(|c| Frame::new(c.to_vec())).collect();
    let by_frame: Vec<u64> = sort_frames(frames, &layout)
        .unwrap()
        .into_iter()
        .flat_map(Frame::into_words)
        .collect();
    assert_eq!(scattered, by_frame);
    println!("frame-level sort agrees");
}
