//! Start the sorting service on an ephemeral port, send it a stream, read the
//! ordered stream back.
//!
//! ```bash
//! cargo run --example tcp_service
//! ```

use std::io::{Read, Write};
use std::net::{Shutdown, TcpStream};
use std::thread;

use framesort::io::{read_all, write_all_to_vec};
use framesort::{extract_timestamp, generate, Diagnostics, FrameFormat, FrameLayout, GenParams, Server, StreamConfig};

fn main() {
    let layout = FrameLayout::default();
    let config = StreamConfig::new(16, layout).unwrap();
    let server = Server::bind("127.0.0.1:0", config, Diagnostics::stderr()).unwrap();
    let (addr, _accept_loop) = server.spawn().unwrap();
    println!("listening on {addr}");

    let params = GenParams {
        batches: 20,
        half_batch: 16,
        seed: 1,
        spread: 8,
        layout,
    };
    let frames: Vec<_> = generate(&params).unwrap().into_iter().flatten().collect();
    let payload = write_all_to_vec(&frames, FrameFormat::Binary, layout).unwrap();

    let mut conn = TcpStream::connect(addr).unwrap();
    let mut writer = conn.try_clone().unwrap();
    let send = thread::spawn(move || {
        writer.write_all(&payload).unwrap();
        // half-close marks end of stream
        writer.shutdown(Shutdown::Write).unwrap();
    });
    let mut reply = Vec::new();
    conn.read_to_end(&mut reply).unwrap();
    send.join().unwrap();

    let sorted = read_all(&reply[..], FrameFormat::Binary, layout).unwrap();
    let ts: Vec<u32> = sorted.iter().map(|f| extract_timestamp(f, &layout).unwrap()).collect();
    assert!(ts.windows(2).all(|w| w[0] <= w[1]));
    println!("sent {} frames, received {} in order", frames.len(), sorted.len());
    println!("first timestamps: {:?}", &ts[..12]);
}
