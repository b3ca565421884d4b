use std::io::{Read, Write};
use std::net::{Shutdown, SocketAddr, TcpStream};
use std::thread;
use std::time::Duration;

use framesort::io::{read_all, write_all_to_vec};
use framesort::{
    extract_timestamp, generate, ContinuousSorter, Diagnostics, Frame, FrameFormat, FrameLayout, GenParams, Server,
    StreamConfig,
};

fn layout() -> FrameLayout {
    FrameLayout::default()
}

fn start(config: StreamConfig) -> (SocketAddr, framesort::io::CapturedDiagnostics) {
    let (diag, captured) = Diagnostics::capture();
    let server = Server::bind("127.0.0.1:0", config, diag).unwrap();
    let (addr, _handle) = server.spawn().unwrap();
    (addr, captured)
}

fn exchange(addr: SocketAddr, payload: &[u8]) -> Vec<u8> {
    let mut stream = TcpStream::connect(addr).unwrap();
    stream.set_read_timeout(Some(Duration::from_secs(20))).unwrap();
    let writer = {
        let mut s = stream.try_clone().unwrap();
        let payload = payload.to_vec();
        thread::spawn(move || {
            s.write_all(&payload).unwrap();
            s.shutdown(Shutdown::Write).unwrap();
        })
    };
    let mut out = Vec::new();
    stream.read_to_end(&mut out).unwrap();
    writer.join().unwrap();
    out
}

fn library_result(config: &StreamConfig, frames: &[Frame]) -> Vec<Frame> {
    let mut sorter = ContinuousSorter::new(config.clone()).unwrap();
    let mut out = Vec::new();
    for chunk in frames.chunks(config.half_batch) {
        if chunk.len() < config.half_batch {
            out.extend(sorter.flush_with(chunk.to_vec()).unwrap());
            return out;
        }
        out.extend(sorter.push_batch(chunk.to_vec()).unwrap().emitted);
    }
    out.extend(sorter.flush());
    out
}

fn stamps(frames: &[Frame]) -> Vec<u32> {
    frames
        .iter()
        .map(|f| extract_timestamp(f, &layout()).unwrap())
        .collect()
}

#[test]
fn two_half_batches_come_back_sorted() {
    let config = StreamConfig::new(4, layout()).unwrap();
    let (addr, _) = start(config.clone());
    let frames: Vec<Frame> = [7u64, 3, 9, 1, 2, 8, 4, 6]
        .iter()
        .enumerate()
        .map(|(i, &t)| Frame::new(vec![i as u64, t, 0xCAFE]))
        .collect();
    let bytes = write_all_to_vec(&frames, FrameFormat::Binary, layout()).unwrap();
    let reply = read_all(&exchange(addr, &bytes)[..], FrameFormat::Binary, layout()).unwrap();
    assert_eq!(stamps(&reply), vec![1, 2, 3, 4, 6, 7, 8, 9]);
    assert_eq!(reply, library_result(&config, &frames));
}

#[test]
fn empty_stream_gets_empty_reply() {
    let (addr, _) = start(StreamConfig::new(4, layout()).unwrap());
    assert!(exchange(addr, &[]).is_empty());
}

#[test]
fn service_matches_library_on_generated_stream() {
    let config = StreamConfig::new(16, layout()).unwrap();
    let (addr, _) = start(config.clone());
    let params = GenParams {
        batches: 40,
        half_batch: 16,
        seed: 5,
        spread: 6,
        ..Default::default()
    };
    let mut frames: Vec<Frame> = generate(&params).unwrap().into_iter().flatten().collect();
    frames.truncate(frames.len() - 5);
    let bytes = write_all_to_vec(&frames, FrameFormat::Binary, layout()).unwrap();
    let reply = read_all(&exchange(addr, &bytes)[..], FrameFormat::Binary, layout()).unwrap();
    assert_eq!(reply, library_result(&config, &frames));
    assert!(stamps(&reply).windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn concurrent_clients_are_isolated() {
    let config = StreamConfig::new(8, layout()).unwrap();
    let (addr, _) = start(config.clone());
    let clients: Vec<_> = (0..4u64)
        .map(|c| {
            let config = config.clone();
            thread::spawn(move || {
                let params = GenParams {
                    batches: 30,
                    half_batch: 8,
                    seed: c,
                    spread: 4,
                    ..Default::default()
                };
                // word 2 carries the client marker
                let frames: Vec<Frame> = generate(&params)
                    .unwrap()
                    .into_iter()
                    .flatten()
                    .map(|f| {
                        let mut w = f.into_words();
                        w[2] = 0xC000 + c;
                        Frame::new(w)
                    })
                    .collect();
                let bytes = write_all_to_vec(&frames, FrameFormat::Binary, layout()).unwrap();
                let reply = read_all(&exchange(addr, &bytes)[..], FrameFormat::Binary, layout()).unwrap();
                assert!(reply.iter().all(|f| f.words()[2] == 0xC000 + c));
                assert_eq!(reply, library_result(&config, &frames));
            })
        })
        .collect();
    for c in clients {
        c.join().unwrap();
    }
}

#[test]
fn malformed_stream_is_reported_and_closed() {
    let (addr, captured) = start(StreamConfig::new(2, layout()).unwrap());
    let frames: Vec<Frame> = (0..4u64).map(|i| Frame::new(vec![i, i, i])).collect();
    let mut bytes = write_all_to_vec(&frames, FrameFormat::Binary, layout()).unwrap();
    bytes.extend_from_slice(&[1, 2, 3]);
    let reply = read_all(&exchange(addr, &bytes)[..], FrameFormat::Binary, layout()).unwrap();
    // the first two batches were answered before the bad tail arrived
    assert_eq!(reply.len(), 2);
    let mut lines = Vec::new();
    for _ in 0..50 {
        lines = captured.lines();
        if lines.iter().any(|l| l.contains("event=decode_error")) {
            break;
        }
        thread::sleep(Duration::from_millis(20));
    }
    let line = lines
        .iter()
        .find(|l| l.contains("event=decode_error"))
        .expect("decode diagnostic");
    assert!(line.contains("frames_out=2"), "{line}");
    assert!(line.contains("offset 24"), "{line}");
}

#[test]
fn violations_go_to_diagnostics_not_output() {
    let (addr, captured) = start(StreamConfig::new(1, layout()).unwrap());
    let frames: Vec<Frame> = [9u64, 10, 9].iter().map(|&t| Frame::new(vec![0, t, 0])).collect();
    let bytes = write_all_to_vec(&frames, FrameFormat::Binary, layout()).unwrap();
    let out = exchange(addr, &bytes);
    assert_eq!(out.len(), 3 * 6);
    let mut found = false;
    for _ in 0..50 {
        if captured
            .lines()
            .iter()
            .any(|l| l.ends_with("event=violation batch=2 offending_min=9 required_floor=9"))
        {
            found = true;
            break;
        }
        thread::sleep(Duration::from_millis(20));
    }
    assert!(found, "{:?}", captured.lines());
}
