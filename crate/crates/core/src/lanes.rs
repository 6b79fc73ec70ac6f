//! Multi-lane frame pipeline and throughput benchmark.
//!
//! A distributor thread pulls frames from the source and deals them
//! round-robin to `lanes` workers through bounded queues. Each worker owns a
//! private engine, serializes and consumes its frames, and reports results
//! to the collector (the calling thread), which releases them in frame order
//! through a reorder buffer.

use std::collections::BTreeMap;
use std::sync::mpsc::{sync_channel, Receiver, SyncSender};
use std::thread;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::engine::{record_to_metrics, Engine, EngineConfig, FrameMetrics};
use crate::error::{Error, Result};
use crate::ingest::{Frame, FrameSource, Resolution};
use crate::synth;
use crate::wire::{self, GridGeometry};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LaneConfig {
    pub lanes: usize,
    /// Frames each lane may have queued ahead of it.
    pub queue_capacity: usize,
    pub engine: EngineConfig,
}

impl Default for LaneConfig {
    fn default() -> Self {
        Self {
            lanes: 6,
            queue_capacity: 4,
            engine: EngineConfig::default(),
        }
    }
}

impl LaneConfig {
    pub fn with_lanes(lanes: usize) -> Self {
        Self {
            lanes,
            ..Self::default()
        }
    }
}

/// Receives metrics in ascending frame order.
pub trait MetricsSink {
    fn accept(&mut self, metrics: FrameMetrics) -> Result<()>;
}

impl<F: FnMut(FrameMetrics) -> Result<()>> MetricsSink for F {
    fn accept(&mut self, metrics: FrameMetrics) -> Result<()> {
        self(metrics)
    }
}

impl MetricsSink for Vec<FrameMetrics> {
    fn accept(&mut self, metrics: FrameMetrics) -> Result<()> {
        self.push(metrics);
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSummary {
    pub frames: u64,
    pub elapsed: Duration,
}

/// Serializer + engine for one lane.
struct Lane {
    engine: Engine,
    resolution: Resolution,
}

impl Lane {
    fn new(resolution: Resolution, cfg: EngineConfig) -> Self {
        Self {
            engine: Engine::new(GridGeometry::new(resolution), cfg),
            resolution,
        }
    }

    fn process(&mut self, frame: &Frame) -> Result<FrameMetrics> {
        let mut words = wire::serialize_frame_checked(frame, self.resolution)?;
        let header = words.next().expect("header word");
        header.decode_header()?;
        for w in words {
            self.engine.consume_word(w)?;
        }
        let rec = self.engine.finalize_frame()?;
        Ok(record_to_metrics(rec, self.engine.geometry(), frame.index()))
    }
}

type LaneResult = (u64, Result<FrameMetrics>);

fn distribute<S: FrameSource>(source: &mut S, queues: Vec<SyncSender<Frame>>) -> Result<()> {
    let mut lane = 0;
    while let Some(frame) = source.next_frame()? {
        if queues[lane].send(frame).is_err() {
            // Collector aborted; the failure is reported from there.
            return Ok(());
        }
        lane = (lane + 1) % queues.len();
    }
    Ok(())
}

fn lane_worker(mut lane: Lane, input: Receiver<Frame>, output: SyncSender<LaneResult>) {
    for frame in input {
        let res = lane.process(&frame);
        let failed = res.is_err();
        if output.send((frame.index(), res)).is_err() || failed {
            return;
        }
    }
}

/// Runs every frame of `source` through `cfg.lanes` independent lanes and
/// hands the metrics to `sink` in ascending frame order.
///
/// Output is identical for any lane count or queue depth. At most
/// `lanes * queue_capacity` frames are queued at once.
pub fn run_pipeline<S, K>(mut source: S, cfg: &LaneConfig, sink: &mut K) -> Result<RunSummary>
where
    S: FrameSource + Send,
    K: MetricsSink + ?Sized,
{
    assert!(cfg.lanes >= 1 && cfg.queue_capacity >= 1, "lanes and queue capacity must be positive");
    let start = Instant::now();
    let resolution = source.resolution();

    thread::scope(|scope| {
        let (result_tx, result_rx) = sync_channel::<LaneResult>(cfg.lanes * cfg.queue_capacity);
        let mut queues = Vec::with_capacity(cfg.lanes);
        for _ in 0..cfg.lanes {
            let (tx, rx) = sync_channel::<Frame>(cfg.queue_capacity);
            let lane = Lane::new(resolution, cfg.engine);
            let out = result_tx.clone();
            scope.spawn(move || lane_worker(lane, rx, out));
            queues.push(tx);
        }
        drop(result_tx);

        let distributor = scope.spawn(move || distribute(&mut source, queues));

        let collected = collect(result_rx, sink);
        // The receiver is gone once collect returns, so a blocked distributor
        // unblocks as the lanes exit.
        let distributed = distributor.join().expect("distributor thread panicked");
        let frames = collected?;
        distributed?;
        Ok(RunSummary {
            frames,
            elapsed: start.elapsed(),
        })
    })
}

fn collect<K: MetricsSink + ?Sized>(results: Receiver<LaneResult>, sink: &mut K) -> Result<u64> {
    let mut pending = BTreeMap::new();
    let mut next = 0u64;
    for (index, res) in results.iter() {
        let metrics = res.map_err(|e| Error::Lane {
            frame_index: index,
            source: Box::new(e),
        })?;
        pending.insert(index, metrics);
        while let Some(m) = pending.remove(&next) {
            sink.accept(m)?;
            next += 1;
        }
    }
    debug_assert!(pending.is_empty(), "gap in frame indices");
    Ok(next)
}

/// Replays a small pool of pre-generated frames `count` times in total.
pub struct SyntheticSource {
    resolution: Resolution,
    pool: Vec<Frame>,
    count: u64,
    next: u64,
}

impl SyntheticSource {
    pub fn new(resolution: Resolution, count: u64, pool_size: usize, seed: u64) -> Self {
        let pool = (0..pool_size.max(1) as u64)
            .map(|i| synth::random_frame_at(synth::trial_seed(seed, i), resolution, i))
            .collect();
        Self {
            resolution,
            pool,
            count,
            next: 0,
        }
    }
}

impl FrameSource for SyntheticSource {
    fn resolution(&self) -> Resolution {
        self.resolution
    }

    fn next_frame(&mut self) -> Result<Option<Frame>> {
        if self.next >= self.count {
            return Ok(None);
        }
        let frame = self.pool[(self.next % self.pool.len() as u64) as usize].with_index(self.next);
        self.next += 1;
        Ok(Some(frame))
    }
}

/// Frame rate a stream must sustain to count as real time.
pub const REALTIME_FPS: f64 = 30.0;
/// Six-module FPGA throughput quoted for comparison, in bytes/second.
pub const FPGA_REFERENCE_BYTES_PER_SEC: f64 = 2.19e9;

pub const DEFAULT_RESOLUTIONS: [(u32, u32); 5] =
    [(320, 240), (640, 480), (1920, 1080), (4096, 2160), (7680, 4320)];

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub resolutions: Vec<Resolution>,
    pub lanes: Vec<usize>,
    pub frames_per_point: u64,
    pub queue_capacity: usize,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            resolutions: DEFAULT_RESOLUTIONS
                .iter()
                .map(|&(w, h)| Resolution::new(w, h).expect("valid default"))
                .collect(),
            lanes: vec![1, 6],
            frames_per_point: 100,
            queue_capacity: 4,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub width: u32,
    pub height: u32,
    pub lanes: usize,
    pub frames: u64,
    pub wall_seconds: f64,
    pub fps: f64,
    pub bytes_per_second: f64,
    pub realtime: bool,
}

impl BenchRow {
    fn new(res: Resolution, lanes: usize, frames: u64, wall: Duration) -> Self {
        let wall_seconds = wall.as_secs_f64().max(f64::MIN_POSITIVE);
        let fps = frames as f64 / wall_seconds;
        Self {
            width: res.width(),
            height: res.height(),
            lanes,
            frames,
            wall_seconds,
            fps,
            bytes_per_second: fps * res.plane_len() as f64,
            realtime: fps >= REALTIME_FPS,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    pub fn row(&self, width: u32, height: u32, lanes: usize) -> Option<&BenchRow> {
        self.rows
            .iter()
            .find(|r| r.width == width && r.height == height && r.lanes == lanes)
    }

    /// Human-readable table.
    pub fn to_table(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:>11} {:>5} {:>7} {:>9} {:>10} {:>12} {:>9}",
            "resolution", "lanes", "frames", "wall[s]", "fps", "MB/s", "realtime"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:>11} {:>5} {:>7} {:>9.3} {:>10.1} {:>12.1} {:>9}",
                format!("{}x{}", r.width, r.height),
                r.lanes,
                r.frames,
                r.wall_seconds,
                r.fps,
                r.bytes_per_second / 1e6,
                if r.realtime { "yes" } else { "no" }
            );
        }
        let _ = writeln!(
            out,
            "real time = at least {REALTIME_FPS} fps; reference: 6-module FPGA datapath {:.2} GB/s",
            FPGA_REFERENCE_BYTES_PER_SEC / 1e9
        );
        out
    }
}

/// Measures wall time for `frames_per_point` synthetic frames at every
/// (resolution, lane count) pair. Frame generation is excluded from timing.
pub fn benchmark(cfg: &BenchConfig) -> Result<BenchReport> {
    let mut report = BenchReport::default();
    for &res in &cfg.resolutions {
        for &lanes in &cfg.lanes {
            let source = SyntheticSource::new(res, cfg.frames_per_point, 4, cfg.seed);
            let lane_cfg = LaneConfig {
                lanes,
                queue_capacity: cfg.queue_capacity,
                engine: EngineConfig::default(),
            };
            let mut frames = 0u64;
            let mut count = |_: FrameMetrics| -> Result<()> {
                frames += 1;
                Ok(())
            };
            let summary = run_pipeline(source, &lane_cfg, &mut count)?;
            report.rows.push(BenchRow::new(res, lanes, summary.frames, summary.elapsed));
        }
    }
    Ok(report)
}
