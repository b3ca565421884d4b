//! Frame layouts, timestamp extraction and the binary/hex encodings.
//!
//! ```bash
//! cargo run --example frame_codec
//! ```

use framesort::{decode_frame, encode_frame, extract_timestamp, format_hex_frame, parse_hex_frame, Frame, FrameLayout};

fn main() {
    let layout = FrameLayout::default();
    println!("layout: {layout}");

    let frame = Frame::new(vec![0x1234, 0xAB07, 0x9999]);
    println!("words     {:04X?}", frame.words());
    println!("timestamp {:#04x}", extract_timestamp(&frame, &layout).unwrap());

    let bytes = encode_frame(&frame, &layout).unwrap();
    println!("wire      {:02X?}", bytes);
    assert_eq!(decode_frame(&bytes, &layout).unwrap(), frame);

    let hex = format_hex_frame(&frame, &layout).unwrap();
    println!("hex       {hex}");
    assert_eq!(parse_hex_frame(&hex, &layout).unwrap(), frame);

    // a 12-bit timestamp straddling the first two words
    let spanning = FrameLayout::new(48, 16, 10, 12).unwrap();
    println!(
        "{spanning}: timestamp {:#05x}",
        extract_timestamp(&frame, &spanning).unwrap()
    );

    match parse_hex_frame("12G4567890AB", &layout) {
        Err(e) => println!("bad hex -> {e}"),
        Ok(_) => unreachable!(),
    }
}
