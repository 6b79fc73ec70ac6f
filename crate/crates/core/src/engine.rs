//! Fixed-width streaming metrics datapath.
//!
//! The engine consumes payload words one at a time and keeps nothing but a
//! handful of registers: two 32-bit boundary-difference accumulators, a
//! 16-bit running block sum, two four-deep chains of extreme block sums and
//! a 32-bit interlace counter. When the last microblock of a frame has been
//! consumed the registers are folded into a 128-bit [`MetricRecord`] and
//! reset. The only division (blockiness and interlace ratios) happens in
//! [`record_to_metrics`].

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ingest::Frame;
use crate::wire::{self, DataWord, GridGeometry, MicroblockKind};

/// Initial value of every min-chain slot; strictly above `64 * 255`.
pub const MIN_SENTINEL: u16 = 16384;
/// Largest possible sum over one 8x8 block.
pub const MAX_BLOCK_SUM: u16 = 64 * 255;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EngineConfig {
    /// Blackout fires when the brightest and darkest block sums differ by
    /// no more than this.
    pub th_blout: u32,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self { th_blout: 4 }
    }
}

/// Every register of the datapath.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EngineState {
    pub inter_sum: u32,
    pub intra_sum: u32,
    pub block_sum: u16,
    /// Ascending: `min_chain[0]` is the smallest block sum seen.
    pub min_chain: [u16; 4],
    /// Descending: `max_chain[0]` is the largest block sum seen.
    pub max_chain: [u16; 4],
    pub interlace_count: u32,
    pub microblock_counter: u32,
}

impl Default for EngineState {
    fn default() -> Self {
        Self {
            inter_sum: 0,
            intra_sum: 0,
            block_sum: 0,
            min_chain: [MIN_SENTINEL; 4],
            max_chain: [0; 4],
            interlace_count: 0,
            microblock_counter: 0,
        }
    }
}

#[inline(always)]
fn ad(a: u8, b: u8) -> u32 {
    u32::from(a.abs_diff(b))
}

/// Strict row zigzag over all four columns in one direction.
#[inline(always)]
fn is_interlace(p: &[u8; 16]) -> bool {
    (0..4).all(|c| {
        let col = &p[c * 4..c * 4 + 4];
        col[0] > col[1] && col[2] > col[1] && col[2] > col[3]
    })
}

#[inline(always)]
fn is_interlace2(p: &[u8; 16]) -> bool {
    (0..4).all(|c| {
        let col = &p[c * 4..c * 4 + 4];
        col[0] < col[1] && col[2] < col[1] && col[2] < col[3]
    })
}

impl EngineState {
    /// Applies one payload word. Does not check the frame's word budget; see
    /// [`Engine::consume_word`] for the checked entry point.
    #[inline]
    pub fn consume_word(&mut self, w: DataWord) {
        let b = w.to_le_bytes();
        // p(n) == b[n - 1]
        let p = |n: usize| b[n - 1];
        let kind = wire::microblock_kind(self.microblock_counter);

        match kind {
            MicroblockKind::TopLeft => {}
            MicroblockKind::TopRight => {
                self.intra_sum = self.intra_sum.wrapping_add(
                    ad(p(9), p(5)) + ad(p(10), p(6)) + ad(p(11), p(7)) + ad(p(12), p(8)),
                );
                self.inter_sum = self.inter_sum.wrapping_add(
                    ad(p(9), p(13)) + ad(p(10), p(14)) + ad(p(11), p(15)) + ad(p(12), p(16)),
                );
            }
            MicroblockKind::BottomLeft => {
                self.intra_sum = self.intra_sum.wrapping_add(
                    ad(p(2), p(3)) + ad(p(6), p(7)) + ad(p(10), p(11)) + ad(p(14), p(15)),
                );
                self.inter_sum = self.inter_sum.wrapping_add(
                    ad(p(4), p(3)) + ad(p(8), p(7)) + ad(p(12), p(11)) + ad(p(16), p(15)),
                );
            }
            MicroblockKind::BottomRight => {
                self.intra_sum = self.intra_sum.wrapping_add(
                    ad(p(9), p(5)) + ad(p(8), p(12)) + ad(p(2), p(3)) + ad(p(14), p(15)),
                );
                self.inter_sum = self.inter_sum.wrapping_add(
                    ad(p(9), p(13)) + ad(p(12), p(16)) + ad(p(4), p(3)) + ad(p(15), p(16)),
                );
            }
        }

        let word_sum: u16 = b.iter().map(|&v| u16::from(v)).sum();
        self.block_sum += word_sum;
        if kind == MicroblockKind::BottomRight {
            self.insert_extreme(self.block_sum);
            self.block_sum = 0;
        }

        if is_interlace(&b) || is_interlace2(&b) {
            self.interlace_count = self.interlace_count.wrapping_add(1);
        }

        self.microblock_counter += 1;
    }

    /// Sorted insert of a completed block sum into both extreme chains.
    ///
    /// Comparisons are strict, so a duplicate of an existing entry lands
    /// after it, and a value equal to the chain's last entry is dropped.
    #[inline]
    pub fn insert_extreme(&mut self, s: u16) {
        let [min1, min2, min3, min4] = &mut self.min_chain;
        if s < *min4 {
            if s < *min3 {
                if s < *min2 {
                    if s < *min1 {
                        *min4 = *min3;
                        *min3 = *min2;
                        *min2 = *min1;
                        *min1 = s;
                    } else {
                        *min4 = *min3;
                        *min3 = *min2;
                        *min2 = s;
                    }
                } else {
                    *min4 = *min3;
                    *min3 = s;
                }
            } else {
                *min4 = s;
            }
        }

        let [max1, max2, max3, max4] = &mut self.max_chain;
        if s > *max4 {
            if s > *max3 {
                if s > *max2 {
                    if s > *max1 {
                        *max4 = *max3;
                        *max3 = *max2;
                        *max2 = *max1;
                        *max1 = s;
                    } else {
                        *max4 = *max3;
                        *max3 = *max2;
                        *max2 = s;
                    }
                } else {
                    *max4 = *max3;
                    *max3 = s;
                }
            } else {
                *max4 = s;
            }
        }
    }

    /// Weighted mean of the eight extreme block sums. Each sum is shifted
    /// right by 2 before accumulation so the total fits 16 bits, then the
    /// total is shifted right by the remaining 7 (2^9 = 8 blocks * 64 px).
    pub fn exposure(&self) -> u16 {
        let total: u16 = self
            .max_chain
            .iter()
            .chain(self.min_chain.iter())
            .map(|&v| v >> 2)
            .sum();
        total >> 7
    }

    pub fn blackout(&self, cfg: &EngineConfig) -> bool {
        let spread = self.max_chain[0].wrapping_sub(self.min_chain[0]);
        u32::from(spread) <= cfg.th_blout
    }

    pub fn record(&self, cfg: &EngineConfig) -> MetricRecord {
        MetricRecord::pack(RecordFields {
            inter_sum: self.inter_sum,
            intra_sum: self.intra_sum,
            interlace_count: self.interlace_count,
            exposure: self.exposure(),
            blackout: self.blackout(cfg),
        })
    }
}

/// Unpacked contents of a [`MetricRecord`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RecordFields {
    pub inter_sum: u32,
    pub intra_sum: u32,
    pub interlace_count: u32,
    pub exposure: u16,
    pub blackout: bool,
}

/// The 128-bit per-frame result word.
///
/// | bits    | field           |
/// |---------|-----------------|
/// | 31:0    | inter_sum       |
/// | 63:32   | intra_sum       |
/// | 95:64   | interlace_count |
/// | 111:96  | exposure        |
/// | 112     | blackout        |
/// | 127:113 | zero            |
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MetricRecord(u128);

impl MetricRecord {
    const RESERVED_SHIFT: u32 = 113;

    pub fn pack(f: RecordFields) -> Self {
        MetricRecord(
            u128::from(f.inter_sum)
                | u128::from(f.intra_sum) << 32
                | u128::from(f.interlace_count) << 64
                | u128::from(f.exposure) << 96
                | u128::from(f.blackout) << 112,
        )
    }

    /// Accepts a raw record, rejecting any with reserved bits set.
    pub fn from_bits(bits: u128) -> Result<Self> {
        if bits >> Self::RESERVED_SHIFT != 0 {
            return Err(Error::HeaderMalformed(format!(
                "metric record {bits:#034x} has reserved bits set"
            )));
        }
        Ok(MetricRecord(bits))
    }

    #[inline]
    pub fn bits(self) -> u128 {
        self.0
    }

    pub fn inter_sum(self) -> u32 {
        self.0 as u32
    }

    pub fn intra_sum(self) -> u32 {
        (self.0 >> 32) as u32
    }

    pub fn interlace_count(self) -> u32 {
        (self.0 >> 64) as u32
    }

    pub fn exposure(self) -> u16 {
        (self.0 >> 96) as u16
    }

    pub fn blackout(self) -> bool {
        (self.0 >> 112) & 1 == 1
    }

    pub fn fields(self) -> RecordFields {
        RecordFields {
            inter_sum: self.inter_sum(),
            intra_sum: self.intra_sum(),
            interlace_count: self.interlace_count(),
            exposure: self.exposure(),
            blackout: self.blackout(),
        }
    }
}

/// Post-processed metrics for one frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrameMetrics {
    pub frame_index: u64,
    /// `intra_sum / inter_sum`; `None` when `inter_sum` is zero.
    pub blockiness: Option<f64>,
    pub exposure: u16,
    pub blackout: bool,
    /// Fraction of processed microblocks flagged as combed, in `[0, 1]`.
    pub interlace: f64,
    pub inter_sum: u32,
    pub intra_sum: u32,
    pub interlace_count: u32,
}

pub fn record_to_metrics(rec: MetricRecord, geom: &GridGeometry, frame_index: u64) -> FrameMetrics {
    let f = rec.fields();
    let blockiness = (f.inter_sum != 0).then(|| f64::from(f.intra_sum) / f64::from(f.inter_sum));
    FrameMetrics {
        frame_index,
        blockiness,
        exposure: f.exposure,
        blackout: f.blackout,
        interlace: f64::from(f.interlace_count) / f64::from(geom.microblocks),
        inter_sum: f.inter_sum,
        intra_sum: f.intra_sum,
        interlace_count: f.interlace_count,
    }
}

/// One frame's worth of datapath with its word budget.
#[derive(Debug, Clone)]
pub struct Engine {
    geom: GridGeometry,
    cfg: EngineConfig,
    state: EngineState,
}

impl Engine {
    pub fn new(geom: GridGeometry, cfg: EngineConfig) -> Self {
        Self {
            geom,
            cfg,
            state: EngineState::default(),
        }
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geom
    }

    pub fn config(&self) -> &EngineConfig {
        &self.cfg
    }

    pub fn state(&self) -> &EngineState {
        &self.state
    }

    /// True once every payload word of the frame has been consumed.
    pub fn frame_complete(&self) -> bool {
        self.state.microblock_counter == self.geom.microblocks
    }

    #[inline]
    pub fn consume_word(&mut self, w: DataWord) -> Result<()> {
        if self.frame_complete() {
            return Err(Error::WordOverrun {
                limit: self.geom.microblocks,
            });
        }
        self.state.consume_word(w);
        Ok(())
    }

    /// Emits the frame's record and resets every register.
    pub fn finalize_frame(&mut self) -> Result<MetricRecord> {
        if !self.frame_complete() {
            return Err(Error::FrameIncomplete {
                expected: self.geom.microblocks,
                consumed: self.state.microblock_counter,
            });
        }
        let rec = self.state.record(&self.cfg);
        self.state = EngineState::default();
        Ok(rec)
    }
}

pub fn engine_init(geom: GridGeometry, cfg: EngineConfig) -> Engine {
    Engine::new(geom, cfg)
}

/// Consumes the raw wire stream: a header word announcing the resolution,
/// then the frame's payload words. A record is emitted as soon as the last
/// payload word of a frame arrives, after which the next word must be a new
/// header.
#[derive(Debug, Clone)]
pub struct StreamEngine {
    cfg: EngineConfig,
    engine: Option<Engine>,
    awaiting_header: bool,
}

impl StreamEngine {
    pub fn new(cfg: EngineConfig) -> Self {
        Self {
            cfg,
            engine: None,
            awaiting_header: true,
        }
    }

    /// Geometry of the frame in flight (or the last one seen).
    pub fn geometry(&self) -> Option<&GridGeometry> {
        self.engine.as_ref().map(Engine::geometry)
    }

    pub fn push(&mut self, w: DataWord) -> Result<Option<MetricRecord>> {
        if self.awaiting_header {
            let geom = GridGeometry::new(w.decode_header()?);
            match &mut self.engine {
                Some(e) if e.geom == geom => {}
                slot => *slot = Some(Engine::new(geom, self.cfg)),
            }
            self.awaiting_header = false;
            return Ok(None);
        }
        let engine = self.engine.as_mut().expect("header seen");
        engine.consume_word(w)?;
        if engine.frame_complete() {
            self.awaiting_header = true;
            return engine.finalize_frame().map(Some);
        }
        Ok(None)
    }
}

/// Serializes `frame` and runs it through a fresh stream engine.
pub fn frame_record(frame: &Frame, cfg: &EngineConfig) -> Result<MetricRecord> {
    let mut words = wire::serialize_frame(frame);
    let geom = words.geometry();
    let header = words.next().expect("header word");
    debug_assert_eq!(header.decode_header()?, frame.resolution());
    let mut engine = Engine::new(geom, *cfg);
    for w in words {
        engine.consume_word(w)?;
    }
    engine.finalize_frame()
}

/// Serializes, consumes and post-processes one frame.
pub fn analyze_frame(frame: &Frame, cfg: &EngineConfig) -> Result<FrameMetrics> {
    let rec = frame_record(frame, cfg)?;
    let geom = GridGeometry::new(frame.resolution());
    Ok(record_to_metrics(rec, &geom, frame.index()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::Resolution;
    use crate::wire::{pack_microblock, MicroblockPixels};
    use proptest::prelude::*;

    fn word_from_rows(rows: [[u8; 4]; 4]) -> DataWord {
        let mut px = [0u8; 16];
        for (r, row) in rows.iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                px[c * 4 + r] = v;
            }
        }
        pack_microblock(MicroblockPixels(px))
    }

    fn constant(v: u8, w: u32, h: u32) -> Frame {
        let r = Resolution::new(w, h).unwrap();
        Frame::new(0, r, vec![v; r.plane_len()]).unwrap()
    }

    #[test]
    fn init_values() {
        let s = EngineState::default();
        assert_eq!((s.inter_sum, s.intra_sum, s.interlace_count), (0, 0, 0));
        assert_eq!(s.min_chain, [16384; 4]);
        assert_eq!(s.max_chain, [0; 4]);
        const { assert!(MIN_SENTINEL > MAX_BLOCK_SUM) };
    }

    #[test]
    fn top_right_boundary_word() {
        // Local columns 2,3,4 hold 10,10,50 on every row.
        let mut s = EngineState {
            microblock_counter: 1,
            ..Default::default()
        };
        s.consume_word(word_from_rows([[10, 10, 10, 50]; 4]));
        assert_eq!(s.intra_sum, 0);
        assert_eq!(s.inter_sum, 160);
        assert_eq!(s.microblock_counter, 2);
    }

    #[test]
    fn bottom_left_boundary_word() {
        // Rows 3|4 straddle the horizontal boundary.
        let mut s = EngineState {
            microblock_counter: 2,
            ..Default::default()
        };
        s.consume_word(word_from_rows([[5; 4], [8; 4], [10; 4], [30; 4]]));
        assert_eq!(s.intra_sum, 4 * 2);
        assert_eq!(s.inter_sum, 4 * 20);
    }

    #[test]
    fn comb_word_counts_once() {
        let mut s = EngineState::default();
        s.consume_word(word_from_rows([[100; 4], [50; 4], [100; 4], [50; 4]]));
        assert_eq!(s.interlace_count, 1);
        s.consume_word(word_from_rows([[50; 4], [100; 4], [50; 4], [100; 4]]));
        assert_eq!(s.interlace_count, 2);
        // Equal rows break the strict zigzag.
        s.consume_word(word_from_rows([[100; 4], [50; 4], [100; 4], [100; 4]]));
        assert_eq!(s.interlace_count, 2);
    }

    #[test]
    fn constant_word() {
        let mut s = EngineState::default();
        s.consume_word(DataWord::from_le_bytes([7; 16]));
        assert_eq!((s.inter_sum, s.intra_sum, s.interlace_count), (0, 0, 0));
        assert_eq!(s.block_sum, 112);
    }

    #[test]
    fn extreme_chain_examples() {
        let mut s = EngineState::default();
        for v in [5, 3, 9, 1, 7] {
            s.insert_extreme(v);
        }
        assert_eq!(s.min_chain, [1, 3, 5, 7]);
        assert_eq!(s.max_chain, [9, 7, 5, 3]);

        let mut s = EngineState::default();
        s.insert_extreme(1234);
        assert_eq!(s.min_chain, [1234, 16384, 16384, 16384]);
        assert_eq!(s.max_chain, [1234, 0, 0, 0]);

        let mut s = EngineState::default();
        for _ in 0..4 {
            s.insert_extreme(77);
        }
        assert_eq!(s.min_chain, [77; 4]);
        assert_eq!(s.max_chain, [77; 4]);
    }

    #[test]
    fn constant_frame_record() {
        let f = constant(100, 24, 24);
        let rec = frame_record(&f, &EngineConfig::default()).unwrap();
        assert_eq!(rec.exposure(), 100);
        assert!(rec.blackout());
        assert_eq!((rec.interlace_count(), rec.inter_sum(), rec.intra_sum()), (0, 0, 0));
        let m = analyze_frame(&f, &EngineConfig::default()).unwrap();
        assert_eq!(m.blockiness, None);
        assert_eq!(m.interlace, 0.0);
    }

    #[test]
    fn blackout_threshold_is_strict() {
        // 5x5 blocks -> 4x4 = 16 shifted blocks. Raise one pixel inside the
        // first shifted block.
        for (delta, want) in [(4u8, true), (5, false)] {
            let r = Resolution::new(40, 40).unwrap();
            let mut luma = vec![100u8; r.plane_len()];
            luma[3 * 40 + 3] += delta;
            let f = Frame::new(0, r, luma).unwrap();
            let rec = frame_record(&f, &EngineConfig::default()).unwrap();
            assert_eq!(rec.blackout(), want, "delta {delta}");
        }
        let cfg = EngineConfig { th_blout: 10 };
        let r = Resolution::new(40, 40).unwrap();
        let mut luma = vec![100u8; r.plane_len()];
        luma[3 * 40 + 3] += 5;
        let f = Frame::new(0, r, luma).unwrap();
        assert!(frame_record(&f, &cfg).unwrap().blackout());
    }

    #[test]
    fn small_frames_keep_sentinels() {
        // One shifted block: three min slots stay at 16384, three max at 0.
        let f = constant(100, 16, 16);
        let rec = frame_record(&f, &EngineConfig::default()).unwrap();
        let expect = ((6400u16 >> 2) * 2 + (16384 >> 2) * 3) >> 7;
        assert_eq!(rec.exposure(), expect);
        assert!(rec.blackout());
    }

    #[test]
    fn word_budget_is_enforced() {
        let geom = GridGeometry::new(Resolution::new(16, 16).unwrap());
        let mut e = Engine::new(geom, EngineConfig::default());
        assert!(matches!(
            e.finalize_frame(),
            Err(Error::FrameIncomplete { expected: 4, consumed: 0 })
        ));
        for _ in 0..4 {
            e.consume_word(DataWord(0)).unwrap();
        }
        assert!(matches!(e.consume_word(DataWord(0)), Err(Error::WordOverrun { limit: 4 })));
        e.finalize_frame().unwrap();
        assert_eq!(*e.state(), EngineState::default());
    }

    #[test]
    fn record_layout() {
        let f = RecordFields {
            inter_sum: 0xDEAD_BEEF,
            intra_sum: 0x0123_4567,
            interlace_count: 0x89AB_CDEF,
            exposure: 0x7F80,
            blackout: true,
        };
        let rec = MetricRecord::pack(f);
        assert_eq!(rec.bits() as u32, 0xDEAD_BEEF);
        assert_eq!((rec.bits() >> 96) as u16, 0x7F80);
        assert_eq!(rec.bits() >> 112, 1);
        assert_eq!(rec.fields(), f);
        assert_eq!(MetricRecord::from_bits(rec.bits()).unwrap(), rec);
        assert!(MetricRecord::from_bits(1u128 << 113).is_err());
    }

    #[test]
    fn record_to_metrics_examples() {
        let geom = GridGeometry::new(Resolution::new(24, 24).unwrap());
        let rec = MetricRecord::pack(RecordFields {
            inter_sum: 160,
            ..Default::default()
        });
        assert_eq!(record_to_metrics(rec, &geom, 3).blockiness, Some(0.0));
        let rec = MetricRecord::pack(RecordFields::default());
        assert_eq!(record_to_metrics(rec, &geom, 0).blockiness, None);
        let rec = MetricRecord::pack(RecordFields {
            interlace_count: geom.microblocks,
            ..Default::default()
        });
        let m = record_to_metrics(rec, &geom, 9);
        assert_eq!(m.interlace, 1.0);
        assert_eq!(m.frame_index, 9);
    }

    #[test]
    fn stream_engine_handles_back_to_back_frames() {
        let a = constant(30, 32, 24);
        let b = constant(200, 16, 16);
        let mut se = StreamEngine::new(EngineConfig::default());
        let mut records = Vec::new();
        for f in [&a, &b, &a] {
            for w in wire::serialize_frame(f) {
                if let Some(r) = se.push(w).unwrap() {
                    records.push(r);
                }
            }
        }
        let cfg = EngineConfig::default();
        assert_eq!(
            records,
            vec![
                frame_record(&a, &cfg).unwrap(),
                frame_record(&b, &cfg).unwrap(),
                frame_record(&a, &cfg).unwrap()
            ]
        );
        // A payload word where a header belongs is rejected.
        assert!(se.push(DataWord(u128::MAX)).is_err());
    }

    proptest! {
        #[test]
        fn chains_stay_sorted(sums in proptest::collection::vec(0u16..=MAX_BLOCK_SUM, 1..64)) {
            let mut s = EngineState::default();
            for v in &sums {
                s.insert_extreme(*v);
                prop_assert!(s.min_chain.windows(2).all(|w| w[0] <= w[1]));
                prop_assert!(s.max_chain.windows(2).all(|w| w[0] >= w[1]));
            }
            // Oracle: the four smallest / largest, padded with the initial values.
            let mut lo: Vec<u16> = sums.iter().copied().chain([MIN_SENTINEL; 4]).collect();
            lo.sort_unstable();
            let mut hi: Vec<u16> = sums.iter().copied().chain([0; 4]).collect();
            hi.sort_unstable_by(|a, b| b.cmp(a));
            prop_assert_eq!(&s.min_chain[..], &lo[..4]);
            prop_assert_eq!(&s.max_chain[..], &hi[..4]);
        }
    }
}
