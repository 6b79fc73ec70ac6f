//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 selftest failure.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::engine::{EngineConfig, FrameMetrics};
use crate::error::{Error, Result};
use crate::ingest::{self, FrameSource, Resolution};
use crate::lanes::{self, BenchConfig, BenchRow, LaneConfig};
use crate::selftest;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_SELFTEST: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "vqmetrics", version, about = "No-reference video quality metrics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute per-frame metrics for a video file.
    Analyze(AnalyzeArgs),
    /// Measure throughput over a resolution sweep.
    Bench(BenchArgs),
    /// Check the streaming engine against the reference oracle.
    Selftest(SelftestArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum InputFormat {
    Raw,
    Y4m,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    /// Video file: headerless 8-bit luma frames or YUV4MPEG2.
    #[arg(long)]
    input: PathBuf,
    /// Input container; inferred from the file extension when omitted.
    #[arg(long, value_enum)]
    format: Option<InputFormat>,
    /// Frame width in pixels; required for raw input.
    #[arg(long)]
    width: Option<u32>,
    /// Frame height in pixels; required for raw input.
    #[arg(long)]
    height: Option<u32>,
    /// Number of parallel engine lanes.
    #[arg(long, default_value_t = 6, value_parser = clap::value_parser!(u32).range(1..))]
    lanes: u32,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    output: OutputFormat,
    /// Write rows here instead of stdout.
    #[arg(long)]
    out_file: Option<PathBuf>,
    /// Largest block-sum spread still reported as blackout.
    #[arg(long, default_value_t = 4)]
    th_blout: u32,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Comma-separated WIDTHxHEIGHT list.
    #[arg(long, value_delimiter = ',')]
    resolutions: Option<Vec<Resolution>>,
    /// Comma-separated lane counts.
    #[arg(long, value_delimiter = ',', default_value = "1,6")]
    lanes: Vec<usize>,
    /// Frames per (resolution, lanes) point.
    #[arg(long, default_value_t = 100)]
    frames: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    output: OutputFormat,
    /// Also write structured rows here.
    #[arg(long)]
    out_file: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SelftestArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    trials: u64,
}

/// One output line per frame.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputRow {
    pub frame_index: u64,
    pub blockiness: Option<f64>,
    pub exposure: u16,
    pub blackout: u8,
    pub interlace: f64,
    pub inter_sum: u32,
    pub intra_sum: u32,
}

impl From<&FrameMetrics> for OutputRow {
    fn from(m: &FrameMetrics) -> Self {
        Self {
            frame_index: m.frame_index,
            blockiness: m.blockiness,
            exposure: m.exposure,
            blackout: u8::from(m.blackout),
            interlace: m.interlace,
            inter_sum: m.inter_sum,
            intra_sum: m.intra_sum,
        }
    }
}

/// Streams serializable rows as CSV or as a JSON array.
enum RowWriter<W: Write> {
    Csv(Box<csv::Writer<W>>),
    Json { out: W, rows: u64 },
}

impl<W: Write> RowWriter<W> {
    fn new(format: OutputFormat, out: W) -> Self {
        match format {
            OutputFormat::Csv => RowWriter::Csv(Box::new(csv::Writer::from_writer(out))),
            OutputFormat::Json => RowWriter::Json { out, rows: 0 },
        }
    }

    fn write<T: Serialize>(&mut self, row: &T) -> Result<()> {
        match self {
            RowWriter::Csv(w) => w.serialize(row).map_err(csv_error),
            RowWriter::Json { out, rows } => {
                out.write_all(if *rows == 0 { b"[\n  " } else { b",\n  " })?;
                serde_json::to_writer(&mut *out, row).map_err(io::Error::from)?;
                *rows += 1;
                Ok(())
            }
        }
    }

    fn finish(self) -> Result<()> {
        match self {
            RowWriter::Csv(mut w) => w.flush()?,
            RowWriter::Json { mut out, rows } => {
                out.write_all(if rows == 0 { b"[]\n" } else { b"\n]\n" })?;
                out.flush()?;
            }
        }
        Ok(())
    }
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io(e),
        other => Error::Io(io::Error::other(format!("{other:?}"))),
    }
}

fn destination<'a>(path: Option<&Path>, stdout: &'a mut dyn Write) -> Result<Box<dyn Write + 'a>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|source| {
            Error::FileUnreadable {
                path: p.to_path_buf(),
                source,
            }
        })?)),
        None => Box::new(stdout),
    })
}

enum Failure {
    Usage(String),
    Data(Error),
    Selftest(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Data(e)
    }
}

fn open_source(args: &AnalyzeArgs) -> std::result::Result<Box<dyn FrameSource + Send>, Failure> {
    let format = args.format.unwrap_or_else(|| {
        let is_y4m = args
            .input
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("y4m"));
        if is_y4m {
            InputFormat::Y4m
        } else {
            InputFormat::Raw
        }
    });
    Ok(match format {
        InputFormat::Raw => {
            let (Some(w), Some(h)) = (args.width, args.height) else {
                return Err(Failure::Usage("raw input requires --width and --height".into()));
            };
            Box::new(ingest::open_raw_source(&args.input, Resolution::new(w, h)?)?)
        }
        InputFormat::Y4m => Box::new(ingest::open_y4m_source(&args.input)?),
    })
}

fn analyze(args: &AnalyzeArgs, stdout: &mut dyn Write) -> std::result::Result<(), Failure> {
    let source = open_source(args)?;
    let cfg = LaneConfig {
        lanes: args.lanes as usize,
        engine: EngineConfig {
            th_blout: args.th_blout,
        },
        ..LaneConfig::default()
    };
    let mut writer = RowWriter::new(args.output, destination(args.out_file.as_deref(), stdout)?);
    let mut sink = |m: FrameMetrics| writer.write(&OutputRow::from(&m));
    let run = lanes::run_pipeline(source, &cfg, &mut sink);
    // Flush whatever was delivered before reporting a mid-stream error.
    let finished = writer.finish();
    run?;
    finished?;
    Ok(())
}

fn bench(args: &BenchArgs, stdout: &mut dyn Write) -> std::result::Result<(), Failure> {
    if args.lanes.is_empty() || args.lanes.contains(&0) {
        return Err(Failure::Usage("--lanes values must be positive".into()));
    }
    let mut cfg = BenchConfig {
        lanes: args.lanes.clone(),
        frames_per_point: args.frames,
        seed: args.seed,
        ..BenchConfig::default()
    };
    if let Some(r) = &args.resolutions {
        cfg.resolutions = r.clone();
    }
    let report = lanes::benchmark(&cfg)?;
    stdout.write_all(report.to_table().as_bytes()).map_err(Error::from)?;
    if let Some(path) = &args.out_file {
        let mut sink = io::sink();
        let mut writer = RowWriter::new(args.output, destination(Some(path), &mut sink)?);
        for row in &report.rows {
            writer.write::<BenchRow>(row)?;
        }
        writer.finish()?;
    }
    Ok(())
}

fn run_selftest(args: &SelftestArgs, stdout: &mut dyn Write) -> std::result::Result<(), Failure> {
    let report = selftest::run(args.seed, args.trials);
    let summary = format!(
        "selftest seed={} trials={} failures={}\n\
         mean exposure: 4+4 block sums {:.3}, 3+3 block means {:.3}\n",
        args.seed, report.trials, report.failures, report.mean_exposure_hw, report.mean_exposure_float
    );
    stdout.write_all(summary.as_bytes()).map_err(Error::from)?;
    match report.first_failure {
        None => {
            writeln!(stdout, "PASS").map_err(Error::from)?;
            Ok(())
        }
        Some(m) => Err(Failure::Selftest(format!("FAIL: first mismatch at {m}"))),
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let target: &mut dyn Write = if code == EXIT_OK { stdout } else { stderr };
            let _ = write!(target, "{}", e.render());
            return code;
        }
    };

    let outcome = match &cli.command {
        Command::Analyze(a) => analyze(a, stdout),
        Command::Bench(b) => bench(b, stdout),
        Command::Selftest(s) => run_selftest(s, stdout),
    };
    let _ = stdout.flush();
    match outcome {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Data(e)) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_DATA
        }
        Err(Failure::Selftest(msg)) => {
            let _ = writeln!(stderr, "{msg}");
            EXIT_SELFTEST
        }
    }
}
