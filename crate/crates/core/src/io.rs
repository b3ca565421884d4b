//! Frame readers and writers, the shared stream pipeline, and the TCP service.
//!
//! Two formats are supported: raw binary (concatenated wire frames, no
//! header or delimiters) and hex text (one frame per line, blank lines and
//! `#` comments ignored).
//!
//! The TCP service speaks the raw binary format in both directions. A client
//! writes frames and half-closes its write side; the server writes sorted
//! frames back as each batch is processed, flushes the carry on
//! end-of-stream and closes.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::path::Path;
use std::sync::{Arc, Mutex};
use std::thread;

use thiserror::Error;

use crate::frame::{
    decode_frame, encode_frame_into, format_hex_frame, parse_hex_frame, Frame, FrameError, FrameLayout,
};
use crate::stream::{ContinuousSorter, StreamConfig, StreamError, ViolationReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub enum FrameFormat {
    #[default]
    Binary,
    Hex,
}

#[derive(Debug, Error)]
pub enum IoStreamError {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("truncated frame at byte offset {offset}: {got} of {expected} bytes")]
    Truncated { offset: u64, got: usize, expected: usize },
    #[error("line {line}: {source}")]
    HexLine { line: usize, source: FrameError },
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Stream(#[from] StreamError),
}

impl IoStreamError {
    /// True for malformed input, as opposed to transport or policy failures.
    pub fn is_decode(&self) -> bool {
        matches!(
            self,
            IoStreamError::Truncated { .. } | IoStreamError::HexLine { .. } | IoStreamError::Frame(_)
        )
    }
}

/// Iterator over the frames of a byte stream.
pub struct FrameSource<R> {
    reader: R,
    format: FrameFormat,
    layout: FrameLayout,
    offset: u64,
    line: usize,
    frames_read: u64,
    done: bool,
    buf: Vec<u8>,
    text: String,
}

impl<R: BufRead> FrameSource<R> {
    pub fn new(reader: R, format: FrameFormat, layout: FrameLayout) -> Result<Self, FrameError> {
        let buf = match format {
            FrameFormat::Binary => vec![0; layout.frame_bytes()?],
            FrameFormat::Hex => Vec::new(),
        };
        Ok(FrameSource {
            reader,
            format,
            layout,
            offset: 0,
            line: 0,
            frames_read: 0,
            done: false,
            buf,
            text: String::new(),
        })
    }

    pub fn frames_read(&self) -> u64 {
        self.frames_read
    }

    /// Bytes consumed so far.
    pub fn offset(&self) -> u64 {
        self.offset
    }

    fn next_binary(&mut self) -> Result<Option<Frame>, IoStreamError> {
        let expected = self.buf.len();
        let mut got = 0;
        while got < expected {
            match self.reader.read(&mut self.buf[got..]) {
                Ok(0) => break,
                Ok(n) => got += n,
                Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
                Err(e) => return Err(e.into()),
            }
        }
        if got == 0 {
            return Ok(None);
        }
        if got < expected {
            return Err(IoStreamError::Truncated {
                offset: self.offset,
                got,
                expected,
            });
        }
        self.offset += expected as u64;
        Ok(Some(decode_frame(&self.buf, &self.layout)?))
    }

    fn next_hex(&mut self) -> Result<Option<Frame>, IoStreamError> {
        loop {
            self.text.clear();
            let n = self.reader.read_line(&mut self.text)?;
            if n == 0 {
                return Ok(None);
            }
            self.offset += n as u64;
            self.line += 1;
            let trimmed = self.text.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let line = self.text.trim_end_matches(['\n', '\r']);
            return parse_hex_frame(line, &self.layout)
                .map(Some)
                .map_err(|source| IoStreamError::HexLine {
                    line: self.line,
                    source,
                });
        }
    }
}

impl FrameSource<Box<dyn BufRead + Send>> {
    pub fn from_path(path: impl AsRef<Path>, format: FrameFormat, layout: FrameLayout) -> Result<Self, IoStreamError> {
        let reader: Box<dyn BufRead + Send> = Box::new(BufReader::new(File::open(path)?));
        Ok(FrameSource::new(reader, format, layout)?)
    }

    pub fn stdin(format: FrameFormat, layout: FrameLayout) -> Result<Self, IoStreamError> {
        let reader: Box<dyn BufRead + Send> = Box::new(BufReader::new(io::stdin()));
        Ok(FrameSource::new(reader, format, layout)?)
    }
}

impl<R: BufRead> Iterator for FrameSource<R> {
    type Item = Result<Frame, IoStreamError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let next = match self.format {
            FrameFormat::Binary => self.next_binary(),
            FrameFormat::Hex => self.next_hex(),
        };
        match next {
            Ok(Some(f)) => {
                self.frames_read += 1;
                Some(Ok(f))
            }
            Ok(None) => {
                self.done = true;
                None
            }
            Err(e) => {
                self.done = true;
                Some(Err(e))
            }
        }
    }
}

/// Groups a frame iterator into batches of `half_batch`; the last batch may be short.
pub struct Batches<I> {
    frames: I,
    half_batch: usize,
    done: bool,
}

pub fn read_batches<I>(frames: I, half_batch: usize) -> Batches<I::IntoIter>
where
    I: IntoIterator<Item = Result<Frame, IoStreamError>>,
{
    assert!(half_batch > 0, "half_batch must be positive");
    Batches {
        frames: frames.into_iter(),
        half_batch,
        done: false,
    }
}

impl<I> Iterator for Batches<I>
where
    I: Iterator<Item = Result<Frame, IoStreamError>>,
{
    type Item = Result<Vec<Frame>, IoStreamError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let mut batch = Vec::with_capacity(self.half_batch);
        while batch.len() < self.half_batch {
            match self.frames.next() {
                Some(Ok(f)) => batch.push(f),
                Some(Err(e)) => {
                    self.done = true;
                    return Some(Err(e));
                }
                None => {
                    self.done = true;
                    break;
                }
            }
        }
        (!batch.is_empty()).then_some(Ok(batch))
    }
}

/// Writes frames in the order given.
pub struct FrameSink<W: Write> {
    writer: W,
    format: FrameFormat,
    layout: FrameLayout,
    scratch: Vec<u8>,
    frames_written: u64,
}

impl<W: Write> FrameSink<W> {
    pub fn new(writer: W, format: FrameFormat, layout: FrameLayout) -> Result<Self, FrameError> {
        match format {
            FrameFormat::Binary => {
                layout.frame_bytes()?;
            }
            FrameFormat::Hex => {
                format_hex_frame(&layout.zero_frame(), &layout)?;
            }
        }
        Ok(FrameSink {
            writer,
            format,
            layout,
            scratch: Vec::new(),
            frames_written: 0,
        })
    }

    pub fn write_frame(&mut self, frame: &Frame) -> Result<(), IoStreamError> {
        match self.format {
            FrameFormat::Binary => {
                self.scratch.clear();
                encode_frame_into(frame, &self.layout, &mut self.scratch)?;
                self.writer.write_all(&self.scratch)?;
            }
            FrameFormat::Hex => {
                let line = format_hex_frame(frame, &self.layout)?;
                writeln!(self.writer, "{line}")?;
            }
        }
        self.frames_written += 1;
        Ok(())
    }

    pub fn write_all<'a>(&mut self, frames: impl IntoIterator<Item = &'a Frame>) -> Result<(), IoStreamError> {
        frames.into_iter().try_for_each(|f| self.write_frame(f))
    }

    pub fn flush(&mut self) -> Result<(), IoStreamError> {
        self.writer.flush()?;
        Ok(())
    }

    pub fn frames_written(&self) -> u64 {
        self.frames_written
    }

    pub fn into_inner(mut self) -> Result<W, IoStreamError> {
        self.flush()?;
        Ok(self.writer)
    }
}

impl FrameSink<Box<dyn Write + Send>> {
    pub fn create(path: impl AsRef<Path>, format: FrameFormat, layout: FrameLayout) -> Result<Self, IoStreamError> {
        let writer: Box<dyn Write + Send> = Box::new(BufWriter::new(File::create(path)?));
        Ok(FrameSink::new(writer, format, layout)?)
    }

    pub fn stdout(format: FrameFormat, layout: FrameLayout) -> Result<Self, IoStreamError> {
        let writer: Box<dyn Write + Send> = Box::new(BufWriter::new(io::stdout()));
        Ok(FrameSink::new(writer, format, layout)?)
    }
}

/// Line-oriented `key=value` diagnostic channel, shareable across threads.
#[derive(Clone)]
pub struct Diagnostics {
    out: Arc<Mutex<dyn Write + Send>>,
}

impl Diagnostics {
    pub fn new(out: impl Write + Send + 'static) -> Self {
        Diagnostics {
            out: Arc::new(Mutex::new(out)),
        }
    }

    pub fn stderr() -> Self {
        Diagnostics::new(io::stderr())
    }

    pub fn sink() -> Self {
        Diagnostics::new(io::sink())
    }

    /// In-memory diagnostics plus a handle for reading them back.
    pub fn capture() -> (Self, CapturedDiagnostics) {
        let buf = CapturedDiagnostics::default();
        (Diagnostics::new(buf.clone()), buf)
    }

    pub fn record(&self, line: &str) {
        let mut out = self.out.lock().unwrap_or_else(|p| p.into_inner());
        // diagnostics are best effort
        let _ = writeln!(out, "{line}");
        let _ = out.flush();
    }

    pub fn violation(&self, context: &str, report: &ViolationReport) {
        self.record(&format!("{context}{report}"));
    }
}

#[derive(Clone, Default)]
pub struct CapturedDiagnostics(Arc<Mutex<Vec<u8>>>);

impl CapturedDiagnostics {
    pub fn lines(&self) -> Vec<String> {
        let buf = self.0.lock().unwrap_or_else(|p| p.into_inner());
        String::from_utf8_lossy(&buf).lines().map(str::to_owned).collect()
    }
}

impl Write for CapturedDiagnostics {
    fn write(&mut self, data: &[u8]) -> io::Result<usize> {
        self.0.lock().unwrap_or_else(|p| p.into_inner()).extend_from_slice(data);
        Ok(data.len())
    }

    fn flush(&mut self) -> io::Result<()> {
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StreamSummary {
    pub frames_in: u64,
    pub frames_out: u64,
    pub batches: u64,
    pub violations: u64,
}

/// Drives a [`ContinuousSorter`] from `source` into `sink`, writing each
/// emission as soon as it is produced. Violation reports go to `diag`
/// prefixed with `context`. With the error policy the first violation
/// aborts with [`StreamError::Violation`].
pub fn run_stream<R: BufRead, W: Write>(
    source: FrameSource<R>,
    sink: &mut FrameSink<W>,
    config: &StreamConfig,
    diag: &Diagnostics,
    context: &str,
) -> Result<StreamSummary, IoStreamError> {
    let mut sorter = ContinuousSorter::new(config.clone())?;
    let mut summary = StreamSummary::default();
    for batch in read_batches(source, config.half_batch) {
        let batch = batch?;
        summary.frames_in += batch.len() as u64;
        if batch.len() < config.half_batch {
            let tail = sorter.flush_with(batch)?;
            sink.write_all(&tail)?;
            summary.frames_out += tail.len() as u64;
            sink.flush()?;
            return Ok(summary);
        }
        summary.batches += 1;
        let outcome = match sorter.push_batch(batch) {
            Err(StreamError::Violation(report)) => {
                diag.violation(context, &report);
                return Err(StreamError::Violation(report).into());
            }
            other => other?,
        };
        for report in &outcome.violations {
            summary.violations += 1;
            diag.violation(context, report);
        }
        if !outcome.emitted.is_empty() {
            sink.write_all(&outcome.emitted)?;
            sink.flush()?;
            summary.frames_out += outcome.emitted.len() as u64;
        }
    }
    let tail = sorter.flush();
    sink.write_all(&tail)?;
    summary.frames_out += tail.len() as u64;
    sink.flush()?;
    Ok(summary)
}

/// Handles one client connection to completion.
pub fn handle_connection(
    stream: TcpStream,
    config: &StreamConfig,
    diag: &Diagnostics,
) -> Result<StreamSummary, IoStreamError> {
    let peer = stream
        .peer_addr()
        .map(|a| a.to_string())
        .unwrap_or_else(|_| "unknown".into());
    let context = format!("peer={peer} ");
    let reader = BufReader::new(stream.try_clone()?);
    let source = FrameSource::new(reader, FrameFormat::Binary, config.layout)?;
    let mut sink = FrameSink::new(BufWriter::new(stream.try_clone()?), FrameFormat::Binary, config.layout)?;
    let result = run_stream(source, &mut sink, config, diag, &context);
    match &result {
        Ok(summary) => diag.record(&format!(
            "{context}event=closed frames_in={} frames_out={} violations={}",
            summary.frames_in, summary.frames_out, summary.violations
        )),
        Err(e) if e.is_decode() => diag.record(&format!(
            "{context}event=decode_error frames_out={} error={:?}",
            sink.frames_written(),
            e.to_string()
        )),
        Err(e) => diag.record(&format!("{context}event=error error={:?}", e.to_string())),
    }
    let _ = sink.flush();
    let _ = stream.shutdown(Shutdown::Both);
    result
}

/// TCP front end: one thread and one independent sorter per connection.
pub struct Server {
    listener: TcpListener,
    config: StreamConfig,
    diag: Diagnostics,
}

impl Server {
    pub fn bind(addr: impl ToSocketAddrs, config: StreamConfig, diag: Diagnostics) -> Result<Self, IoStreamError> {
        config.validate()?;
        config.layout.frame_bytes()?;
        let listener = TcpListener::bind(addr)?;
        Ok(Server { listener, config, diag })
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    /// Accepts connections forever.
    pub fn run(self) -> io::Result<()> {
        for conn in self.listener.incoming() {
            let stream = match conn {
                Ok(s) => s,
                Err(e) => {
                    self.diag
                        .record(&format!("event=accept_error error={:?}", e.to_string()));
                    continue;
                }
            };
            let config = self.config.clone();
            let diag = self.diag.clone();
            thread::spawn(move || {
                let _ = handle_connection(stream, &config, &diag);
            });
        }
        Ok(())
    }

    /// Runs the accept loop on a background thread.
    pub fn spawn(self) -> io::Result<(SocketAddr, thread::JoinHandle<io::Result<()>>)> {
        let addr = self.local_addr()?;
        Ok((addr, thread::spawn(move || self.run())))
    }
}

/// Binds `addr` and serves until the process exits.
pub fn serve(addr: impl ToSocketAddrs, config: StreamConfig) -> Result<(), IoStreamError> {
    let server = Server::bind(addr, config, Diagnostics::stderr())?;
    server.run()?;
    Ok(())
}

/// Reads every frame from `reader`.
pub fn read_all<R: Read>(reader: R, format: FrameFormat, layout: FrameLayout) -> Result<Vec<Frame>, IoStreamError> {
    FrameSource::new(BufReader::new(reader), format, layout)?.collect()
}

/// Serializes `frames` to a byte vector.
pub fn write_all_to_vec(frames: &[Frame], format: FrameFormat, layout: FrameLayout) -> Result<Vec<u8>, IoStreamError> {
    let mut sink = FrameSink::new(Vec::new(), format, layout)?;
    sink.write_all(frames)?;
    sink.into_inner()
}
