//! Streaming no-reference video quality metrics.
//!
//! Four per-frame metrics are computed on the luma plane: blockiness (coding
//! block boundary visibility), exposure, blackout (uniform frame) and
//! interlace (row comb). Frames are serialized into a stream of 128-bit
//! words ([`wire`]), consumed by a fixed-width datapath ([`engine`]) and
//! checked against straightforward full-precision implementations
//! ([`oracle`]). [`lanes`] runs several independent datapaths in parallel
//! and hosts the throughput benchmark.
//!
//! ```
//! use vqmetrics::engine::{analyze_frame, EngineConfig};
//! use vqmetrics::{Frame, Resolution};
//!
//! let res = Resolution::new(64, 48)?;
//! let frame = Frame::new(0, res, vec![128u8; res.plane_len()])?;
//! let m = analyze_frame(&frame, &EngineConfig::default())?;
//! assert_eq!(m.exposure, 128);
//! assert!(m.blackout);
//! # Ok::<(), vqmetrics::Error>(())
//! ```

pub mod cli;
pub mod engine;
pub mod error;
pub mod ingest;
pub mod lanes;
pub mod oracle;
pub mod selftest;
pub mod synth;
pub mod wire;

pub use engine::{
    analyze_frame, engine_init, frame_record, record_to_metrics, Engine, EngineConfig, EngineState,
    FrameMetrics, MetricRecord, RecordFields, StreamEngine,
};
pub use error::{Error, Result};
pub use ingest::{open_raw_source, open_y4m_source, Frame, FrameSource, MemorySource, Resolution};
pub use lanes::{benchmark, run_pipeline, BenchConfig, BenchReport, LaneConfig, RunSummary};
pub use wire::{
    grid_geometry, microblock_kind, pack_microblock, serialize_frame, unpack_word, DataWord,
    GridGeometry, MicroblockKind, MicroblockPixels,
};
