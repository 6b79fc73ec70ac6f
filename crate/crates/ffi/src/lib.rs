//! C ABI over the vqmetrics engine.
//!
//! Handles are opaque pointers created by `*_new`/`*_open` and released by
//! the matching `*_free`. Every call returns a [`VqStatus`]; on failure the
//! human-readable reason for the calling thread is available from
//! [`vq_last_error_message`] until the next failing call.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use vqmetrics::engine::{self, EngineConfig, MetricRecord, StreamEngine};
use vqmetrics::ingest::{self, FrameSource};
use vqmetrics::{wire, DataWord, Error, Frame, FrameMetrics, GridGeometry, Resolution};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VqStatus {
    Ok = 0,
    EndOfStream = 1,
    NullPointer = -1,
    ResolutionInvalid = -2,
    FileUnreadable = -3,
    TruncatedFrame = -4,
    HeaderMalformed = -5,
    UnsupportedColorspace = -6,
    ResolutionMismatch = -7,
    WordOverrun = -8,
    FrameIncomplete = -9,
    BufferTooSmall = -10,
    Io = -11,
    InvalidArgument = -12,
    Panic = -13,
}

/// One 128-bit stream word or metric record, least significant byte first.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct VqWord {
    pub bytes: [u8; 16],
}

impl From<DataWord> for VqWord {
    fn from(w: DataWord) -> Self {
        VqWord { bytes: w.to_le_bytes() }
    }
}

impl From<VqWord> for DataWord {
    fn from(w: VqWord) -> Self {
        DataWord::from_le_bytes(w.bytes)
    }
}

/// Post-processed metrics of one frame.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VqFrameMetrics {
    pub frame_index: u64,
    /// False when inter_sum is zero; `blockiness` is then 0 and meaningless.
    pub blockiness_defined: bool,
    pub blockiness: f64,
    pub exposure: u16,
    pub blackout: bool,
    pub interlace: f64,
    pub inter_sum: u32,
    pub intra_sum: u32,
    pub interlace_count: u32,
}

impl From<FrameMetrics> for VqFrameMetrics {
    fn from(m: FrameMetrics) -> Self {
        VqFrameMetrics {
            frame_index: m.frame_index,
            blockiness_defined: m.blockiness.is_some(),
            blockiness: m.blockiness.unwrap_or(0.0),
            exposure: m.exposure,
            blackout: m.blackout,
            interlace: m.interlace,
            inter_sum: m.inter_sum,
            intra_sum: m.intra_sum,
            interlace_count: m.interlace_count,
        }
    }
}

/// Streaming engine handle: push words, collect one record per frame.
pub struct VqEngine {
    inner: StreamEngine,
}

/// Frame source handle over a raw or y4m file.
pub struct VqSource {
    inner: Box<dyn FrameSource + Send>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(e: &Error) -> VqStatus {
    match e {
        Error::ResolutionInvalid { .. } => VqStatus::ResolutionInvalid,
        Error::FileUnreadable { .. } => VqStatus::FileUnreadable,
        Error::TruncatedFrame { .. } => VqStatus::TruncatedFrame,
        Error::HeaderMalformed(_) => VqStatus::HeaderMalformed,
        Error::UnsupportedColorspace(_) => VqStatus::UnsupportedColorspace,
        Error::ResolutionMismatch { .. } => VqStatus::ResolutionMismatch,
        Error::WordOverrun { .. } => VqStatus::WordOverrun,
        Error::FrameIncomplete { .. } => VqStatus::FrameIncomplete,
        Error::TooFewBlocks { .. } => VqStatus::InvalidArgument,
        Error::Lane { source, .. } => status_of(source),
        Error::Io(_) => VqStatus::Io,
    }
}

enum Fail {
    Status(VqStatus, String),
    Err(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Err(e)
    }
}

fn null(what: &str) -> Fail {
    Fail::Status(VqStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<VqStatus, Fail>) -> VqStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(status)) => status,
        Ok(Err(Fail::Status(status, msg))) => {
            set_last_error(msg);
            status
        }
        Ok(Err(Fail::Err(e))) => {
            set_last_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_last_error("internal panic".into());
            VqStatus::Panic
        }
    }
}

unsafe fn luma_frame(luma: *const u8, len: usize, width: u32, height: u32, index: u64) -> Result<Frame, Fail> {
    if luma.is_null() {
        return Err(null("luma"));
    }
    let res = Resolution::new(width, height)?;
    if len != res.plane_len() {
        return Err(Fail::Status(
            VqStatus::InvalidArgument,
            format!("luma length {len} does not match {res} ({} bytes)", res.plane_len()),
        ));
    }
    let plane = std::slice::from_raw_parts(luma, len).to_vec();
    Ok(Frame::new(index, res, plane)?)
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn vq_status_string(status: VqStatus) -> *const c_char {
    let s: &'static CStr = match status {
        VqStatus::Ok => c"ok",
        VqStatus::EndOfStream => c"end of stream",
        VqStatus::NullPointer => c"null pointer argument",
        VqStatus::ResolutionInvalid => c"invalid resolution",
        VqStatus::FileUnreadable => c"file unreadable",
        VqStatus::TruncatedFrame => c"truncated frame",
        VqStatus::HeaderMalformed => c"malformed header",
        VqStatus::UnsupportedColorspace => c"unsupported colorspace",
        VqStatus::ResolutionMismatch => c"resolution mismatch",
        VqStatus::WordOverrun => c"word overrun",
        VqStatus::FrameIncomplete => c"frame incomplete",
        VqStatus::BufferTooSmall => c"buffer too small",
        VqStatus::Io => c"i/o error",
        VqStatus::InvalidArgument => c"invalid argument",
        VqStatus::Panic => c"internal panic",
    };
    s.as_ptr()
}

/// Message of the last failing call on this thread, or NULL. Valid until
/// the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn vq_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Number of words (header included) one frame of this size serializes to.
#[no_mangle]
pub unsafe extern "C" fn vq_word_count(width: u32, height: u32, out_count: *mut u64) -> VqStatus {
    guard(|| {
        if out_count.is_null() {
            return Err(null("out_count"));
        }
        let geom = GridGeometry::new(Resolution::new(width, height)?);
        *out_count = geom.words_per_frame();
        Ok(VqStatus::Ok)
    })
}

/// Serializes a luma plane into `out_words`. On `BUFFER_TOO_SMALL`,
/// `out_written` holds the required capacity and nothing is written.
#[no_mangle]
pub unsafe extern "C" fn vq_serialize_frame(
    luma: *const u8,
    len: usize,
    width: u32,
    height: u32,
    out_words: *mut VqWord,
    capacity: usize,
    out_written: *mut usize,
) -> VqStatus {
    guard(|| {
        if out_written.is_null() {
            return Err(null("out_written"));
        }
        let frame = luma_frame(luma, len, width, height, 0)?;
        let words = wire::serialize_frame(&frame);
        let needed = words.len();
        *out_written = needed;
        if capacity < needed {
            return Err(Fail::Status(
                VqStatus::BufferTooSmall,
                format!("need {needed} words, have {capacity}"),
            ));
        }
        if out_words.is_null() {
            return Err(null("out_words"));
        }
        let out = std::slice::from_raw_parts_mut(out_words, needed);
        for (slot, w) in out.iter_mut().zip(words) {
            *slot = w.into();
        }
        Ok(VqStatus::Ok)
    })
}

/// Creates a streaming engine. Free with [`vq_engine_free`].
#[no_mangle]
pub unsafe extern "C" fn vq_engine_new(th_blout: u32, out_engine: *mut *mut VqEngine) -> VqStatus {
    guard(|| {
        if out_engine.is_null() {
            return Err(null("out_engine"));
        }
        let engine = Box::new(VqEngine {
            inner: StreamEngine::new(EngineConfig { th_blout }),
        });
        *out_engine = Box::into_raw(engine);
        Ok(VqStatus::Ok)
    })
}

#[no_mangle]
pub unsafe extern "C" fn vq_engine_free(engine: *mut VqEngine) {
    if !engine.is_null() {
        drop(Box::from_raw(engine));
    }
}

/// Feeds one word. When it completes a frame, `*out_ready` is set and the
/// 128-bit metric record is stored in `out_record`.
#[no_mangle]
pub unsafe extern "C" fn vq_engine_push_word(
    engine: *mut VqEngine,
    word: *const VqWord,
    out_ready: *mut bool,
    out_record: *mut VqWord,
) -> VqStatus {
    guard(|| {
        let engine = engine.as_mut().ok_or_else(|| null("engine"))?;
        let word = word.as_ref().ok_or_else(|| null("word"))?;
        if out_ready.is_null() || out_record.is_null() {
            return Err(null("output pointer"));
        }
        *out_ready = false;
        if let Some(rec) = engine.inner.push((*word).into())? {
            *out_record = VqWord {
                bytes: rec.bits().to_le_bytes(),
            };
            *out_ready = true;
        }
        Ok(VqStatus::Ok)
    })
}

/// Divides out a raw record for a frame of the given size.
#[no_mangle]
pub unsafe extern "C" fn vq_record_to_metrics(
    record: *const VqWord,
    width: u32,
    height: u32,
    frame_index: u64,
    out_metrics: *mut VqFrameMetrics,
) -> VqStatus {
    guard(|| {
        let record = record.as_ref().ok_or_else(|| null("record"))?;
        if out_metrics.is_null() {
            return Err(null("out_metrics"));
        }
        let rec = MetricRecord::from_bits(u128::from_le_bytes(record.bytes))?;
        let geom = GridGeometry::new(Resolution::new(width, height)?);
        *out_metrics = engine::record_to_metrics(rec, &geom, frame_index).into();
        Ok(VqStatus::Ok)
    })
}

/// One-shot: serialize, consume and post-process a single luma plane.
#[no_mangle]
pub unsafe extern "C" fn vq_analyze_frame(
    luma: *const u8,
    len: usize,
    width: u32,
    height: u32,
    th_blout: u32,
    out_metrics: *mut VqFrameMetrics,
) -> VqStatus {
    guard(|| {
        if out_metrics.is_null() {
            return Err(null("out_metrics"));
        }
        let frame = luma_frame(luma, len, width, height, 0)?;
        *out_metrics = engine::analyze_frame(&frame, &EngineConfig { th_blout })?.into();
        Ok(VqStatus::Ok)
    })
}

unsafe fn path_arg(path: *const c_char) -> Result<PathBuf, Fail> {
    if path.is_null() {
        return Err(null("path"));
    }
    let s = CStr::from_ptr(path)
        .to_str()
        .map_err(|_| Fail::Status(VqStatus::InvalidArgument, "path is not UTF-8".into()))?;
    Ok(PathBuf::from(s))
}

unsafe fn emit_source(src: Box<dyn FrameSource + Send>, out: *mut *mut VqSource) -> VqStatus {
    *out = Box::into_raw(Box::new(VqSource { inner: src }));
    VqStatus::Ok
}

/// Opens a headerless raw luma file. Free with [`vq_source_free`].
#[no_mangle]
pub unsafe extern "C" fn vq_source_open_raw(
    path: *const c_char,
    width: u32,
    height: u32,
    out_source: *mut *mut VqSource,
) -> VqStatus {
    guard(|| {
        if out_source.is_null() {
            return Err(null("out_source"));
        }
        let path = path_arg(path)?;
        let src = ingest::open_raw_source(path, Resolution::new(width, height)?)?;
        Ok(emit_source(Box::new(src), out_source))
    })
}

/// Opens a YUV4MPEG2 file. Free with [`vq_source_free`].
#[no_mangle]
pub unsafe extern "C" fn vq_source_open_y4m(path: *const c_char, out_source: *mut *mut VqSource) -> VqStatus {
    guard(|| {
        if out_source.is_null() {
            return Err(null("out_source"));
        }
        let src = ingest::open_y4m_source(path_arg(path)?)?;
        Ok(emit_source(Box::new(src), out_source))
    })
}

#[no_mangle]
pub unsafe extern "C" fn vq_source_free(source: *mut VqSource) {
    if !source.is_null() {
        drop(Box::from_raw(source));
    }
}

#[no_mangle]
pub unsafe extern "C" fn vq_source_resolution(
    source: *const VqSource,
    out_width: *mut u32,
    out_height: *mut u32,
) -> VqStatus {
    guard(|| {
        let source = source.as_ref().ok_or_else(|| null("source"))?;
        if out_width.is_null() || out_height.is_null() {
            return Err(null("output pointer"));
        }
        let res = source.inner.resolution();
        *out_width = res.width();
        *out_height = res.height();
        Ok(VqStatus::Ok)
    })
}

/// Reads the next frame and computes its metrics. Returns
/// `VQ_STATUS_END_OF_STREAM` after the last frame.
#[no_mangle]
pub unsafe extern "C" fn vq_source_next_metrics(
    source: *mut VqSource,
    th_blout: u32,
    out_metrics: *mut VqFrameMetrics,
) -> VqStatus {
    guard(|| {
        let source = source.as_mut().ok_or_else(|| null("source"))?;
        if out_metrics.is_null() {
            return Err(null("out_metrics"));
        }
        match source.inner.next_frame()? {
            None => Ok(VqStatus::EndOfStream),
            Some(frame) => {
                *out_metrics = engine::analyze_frame(&frame, &EngineConfig { th_blout })?.into();
                Ok(VqStatus::Ok)
            }
        }
    })
}
