//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or configuration, 2 malformed input,
//! 3 I/O failure, 4 separation constraint violated under `--on-violation error`.

use std::ffi::OsString;
use std::io::{BufRead, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::bench::{self, BenchConfig, BenchError, BenchReport};
use crate::counting::{sort_frames_with, SortError, SortMode};
use crate::frame::{FrameError, FrameLayout};
use crate::generator::{generate, GenError, GenParams};
use crate::io::{run_stream, Diagnostics, FrameFormat, FrameSink, FrameSource, IoStreamError, Server, StreamSummary};
use crate::stream::{StreamConfig, StreamError, ViolationPolicy};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Decode(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Violation(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Decode(_) => 2,
            CliError::Io(_) => 3,
            CliError::Violation(_) => 4,
        }
    }
}

impl From<IoStreamError> for CliError {
    fn from(e: IoStreamError) -> Self {
        let msg = e.to_string();
        match e {
            IoStreamError::Io(_) => CliError::Io(msg),
            IoStreamError::Stream(StreamError::Violation(_)) => CliError::Violation(msg),
            IoStreamError::Stream(StreamError::InvalidConfig(_)) => CliError::Usage(msg),
            _ => CliError::Decode(msg),
        }
    }
}

impl From<FrameError> for CliError {
    fn from(e: FrameError) -> Self {
        match e {
            FrameError::InvalidLayout(_) | FrameError::UnsupportedLayout(_) => CliError::Usage(e.to_string()),
            _ => CliError::Decode(e.to_string()),
        }
    }
}

impl From<SortError> for CliError {
    fn from(e: SortError) -> Self {
        match e {
            SortError::Frame(f) => f.into(),
            SortError::InvalidKeyWidth(_) => CliError::Usage(e.to_string()),
            _ => CliError::Decode(e.to_string()),
        }
    }
}

impl From<StreamError> for CliError {
    fn from(e: StreamError) -> Self {
        IoStreamError::Stream(e).into()
    }
}

impl From<GenError> for CliError {
    fn from(e: GenError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<BenchError> for CliError {
    fn from(e: BenchError) -> Self {
        match e {
            BenchError::Gen(g) => g.into(),
            BenchError::Stream(s) => s.into(),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "framesort",
    version,
    about = "Continuous counting sort for timestamped frames"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sort a whole input in one pass.
    Sort {
        #[command(flatten)]
        layout: LayoutArgs,
        #[command(flatten)]
        io: IoArgs,
        #[arg(long, value_enum, default_value_t = ModeArg::Paper)]
        mode: ModeArg,
    },
    /// Sort continuously with a bounded carry buffer.
    Stream {
        #[command(flatten)]
        layout: LayoutArgs,
        #[command(flatten)]
        io: IoArgs,
        #[command(flatten)]
        stream: StreamArgs,
    },
    /// Serve the continuous sorter over TCP (raw binary frames).
    Serve {
        #[command(flatten)]
        layout: LayoutArgs,
        #[command(flatten)]
        stream: StreamArgs,
        #[arg(long, default_value = "127.0.0.1:7878")]
        listen: String,
    },
    /// Write a seeded stream that satisfies the separation constraint.
    Gen {
        #[command(flatten)]
        layout: LayoutArgs,
        #[arg(long = "out", default_value = "-")]
        output: PathBuf,
        #[arg(long, value_enum, default_value_t = FormatArg::Bin)]
        format: FormatArg,
        #[arg(long, default_value_t = 16)]
        batches: u64,
        #[arg(long, default_value_t = 64)]
        half_batch: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Width of each batch's timestamp window.
        #[arg(long, default_value_t = 2)]
        spread: u64,
    },
    /// Compare per-batch latency on streams of L and 10L batches.
    Bench {
        #[command(flatten)]
        layout: LayoutArgs,
        #[arg(long, default_value_t = 64)]
        half_batch: usize,
        /// Short stream length L.
        #[arg(long, default_value_t = 1000)]
        batches: u64,
        #[arg(long, default_value_t = 3)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = ModeArg::Paper)]
        mode: ModeArg,
    },
}

#[derive(Debug, Clone, Args)]
pub struct LayoutArgs {
    #[arg(long, default_value_t = 48)]
    pub frame_bits: u32,
    #[arg(long, default_value_t = 16)]
    pub word_bits: u32,
    #[arg(long, default_value_t = 16)]
    pub ts_offset: u32,
    #[arg(long, default_value_t = 8)]
    pub ts_width: u32,
}

impl LayoutArgs {
    pub fn layout(&self) -> Result<FrameLayout, CliError> {
        Ok(FrameLayout::new(
            self.frame_bits,
            self.word_bits,
            self.ts_offset,
            self.ts_width,
        )?)
    }
}

#[derive(Debug, Clone, Args)]
pub struct IoArgs {
    /// Input path, `-` for stdin.
    #[arg(long = "in", default_value = "-")]
    pub input: PathBuf,
    /// Output path, `-` for stdout.
    #[arg(long = "out", default_value = "-")]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value_t = FormatArg::Bin)]
    pub format: FormatArg,
}

#[derive(Debug, Clone, Args)]
pub struct StreamArgs {
    #[arg(long, default_value_t = 64)]
    pub half_batch: usize,
    #[arg(long, value_enum, default_value_t = ModeArg::Paper)]
    pub mode: ModeArg,
    #[arg(long, value_enum, default_value_t = PolicyArg::Warn)]
    pub on_violation: PolicyArg,
}

impl StreamArgs {
    pub fn config(&self, layout: FrameLayout) -> Result<StreamConfig, CliError> {
        Ok(StreamConfig::new(self.half_batch, layout)?
            .with_mode(self.mode.into())
            .with_policy(self.on_violation.into()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Bin,
    Hex,
}

impl From<FormatArg> for FrameFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Bin => FrameFormat::Binary,
            FormatArg::Hex => FrameFormat::Hex,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Paper,
    Stable,
}

impl From<ModeArg> for SortMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Paper => SortMode::Paper,
            ModeArg::Stable => SortMode::Stable,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    Warn,
    Error,
    Drop,
}

impl From<PolicyArg> for ViolationPolicy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Warn => ViolationPolicy::Warn,
            PolicyArg::Error => ViolationPolicy::Error,
            PolicyArg::Drop => ViolationPolicy::DropBatch,
        }
    }
}

/// Reads everything, sorts once, writes. Returns the frame count.
pub fn cmd_sort<R: BufRead, W: Write>(
    source: FrameSource<R>,
    sink: &mut FrameSink<W>,
    layout: &FrameLayout,
    mode: SortMode,
) -> Result<usize, CliError> {
    let frames = source.collect::<Result<Vec<_>, _>>()?;
    let sorted = sort_frames_with(frames, layout, mode)?;
    sink.write_all(sorted.as_slice())?;
    sink.flush()?;
    Ok(sorted.len())
}

pub fn cmd_stream<R: BufRead, W: Write>(
    source: FrameSource<R>,
    sink: &mut FrameSink<W>,
    config: &StreamConfig,
    diag: &Diagnostics,
) -> Result<StreamSummary, CliError> {
    Ok(run_stream(source, sink, config, diag, "")?)
}

pub fn cmd_gen<W: Write>(params: &GenParams, sink: &mut FrameSink<W>) -> Result<u64, CliError> {
    let stream = generate(params)?;
    for batch in &stream {
        sink.write_all(batch)?;
    }
    sink.flush()?;
    Ok(sink.frames_written())
}

pub fn cmd_bench(config: &BenchConfig) -> Result<BenchReport, CliError> {
    Ok(bench::run(config)?)
}

fn open_source(
    path: &PathBuf,
    format: FrameFormat,
    layout: FrameLayout,
) -> Result<FrameSource<Box<dyn BufRead + Send>>, CliError> {
    let source = if path.as_os_str() == "-" {
        FrameSource::stdin(format, layout)
    } else {
        FrameSource::from_path(path, format, layout)
    };
    source.map_err(|e| match e {
        IoStreamError::Io(io) => CliError::Io(format!("{}: {io}", path.display())),
        other => other.into(),
    })
}

fn open_sink(
    path: &PathBuf,
    format: FrameFormat,
    layout: FrameLayout,
) -> Result<FrameSink<Box<dyn Write + Send>>, CliError> {
    let sink = if path.as_os_str() == "-" {
        FrameSink::stdout(format, layout)
    } else {
        FrameSink::create(path, format, layout)
    };
    sink.map_err(|e| match e {
        IoStreamError::Io(io) => CliError::Io(format!("{}: {io}", path.display())),
        other => other.into(),
    })
}

fn format_report(report: &BenchReport, config: &BenchConfig) -> String {
    let mut out = format!(
        "half_batch={} ts_width={} short_batches={} long_batches={}\n",
        config.half_batch,
        config.layout.ts_width(),
        report.short_batches,
        report.long_batches
    );
    for (i, ((s, l), r)) in report
        .short_means
        .iter()
        .zip(&report.long_means)
        .zip(&report.ratios)
        .enumerate()
    {
        out.push_str(&format!(
            "rep={i} short_mean_ns={} long_mean_ns={} ratio={r:.4}\n",
            s.as_nanos(),
            l.as_nanos()
        ));
    }
    out.push_str(&format!(
        "median_short_ns={} median_long_ns={} median_ratio={:.4}\n",
        report.median_short().as_nanos(),
        report.median_long().as_nanos(),
        report.median_ratio()
    ));
    out
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Sort { layout, io, mode } => {
            let layout = layout.layout()?;
            let format = io.format.into();
            let source = open_source(&io.input, format, layout)?;
            let mut sink = open_sink(&io.output, format, layout)?;
            cmd_sort(source, &mut sink, &layout, mode.into())?;
        }
        Command::Stream { layout, io, stream } => {
            let layout = layout.layout()?;
            let config = stream.config(layout)?;
            let format = io.format.into();
            let source = open_source(&io.input, format, layout)?;
            let mut sink = open_sink(&io.output, format, layout)?;
            cmd_stream(source, &mut sink, &config, &Diagnostics::stderr())?;
        }
        Command::Serve { layout, stream, listen } => {
            let layout = layout.layout()?;
            let config = stream.config(layout)?;
            let server = Server::bind(listen.as_str(), config, Diagnostics::stderr())?;
            let addr = server.local_addr().map_err(|e| CliError::Io(e.to_string()))?;
            eprintln!("event=listening addr={addr}");
            server.run().map_err(|e| CliError::Io(e.to_string()))?;
        }
        Command::Gen {
            layout,
            output,
            format,
            batches,
            half_batch,
            seed,
            spread,
        } => {
            let layout = layout.layout()?;
            let params = GenParams {
                batches,
                half_batch,
                seed,
                spread,
                layout,
            };
            // validate before creating the output file
            params.check_feasible()?;
            let mut sink = open_sink(&output, format.into(), layout)?;
            cmd_gen(&params, &mut sink)?;
        }
        Command::Bench {
            layout,
            half_batch,
            batches,
            reps,
            seed,
            mode,
        } => {
            let layout = layout.layout()?;
            StreamConfig::new(half_batch, layout)?;
            let config = BenchConfig {
                half_batch,
                layout,
                mode: mode.into(),
                batches,
                repetitions: reps,
                seed,
            };
            let report = cmd_bench(&config)?;
            print!("{}", format_report(&report, &config));
        }
    }
    Ok(())
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("framesort: {e}");
            e.exit_code()
        }
    }
}
