//! Reference implementations of the four metrics, computed straight from
//! frame pixels.
//!
//! Nothing here touches the word stream or the engine's registers. Sums use
//! wide integers, extremes come from sorting, and the pixel pairs are
//! addressed by frame coordinates. Truncation appears only in
//! [`exposure_hw`], where the shifts are part of the definition.

use crate::engine::{EngineConfig, MIN_SENTINEL};
use crate::error::{Error, Result};
use crate::ingest::Frame;
use crate::wire::GridGeometry;

/// Top-left frame coordinate (0-based) of every shifted block, raster order.
fn shifted_origins(frame: &Frame) -> impl Iterator<Item = (usize, usize)> {
    let g = GridGeometry::new(frame.resolution());
    let (rows, cols) = (g.shifted_rows as usize, g.shifted_cols as usize);
    (0..rows).flat_map(move |u| (0..cols).map(move |v| (1 + 8 * u, 1 + 8 * v)))
}

/// Boundary pairs of one shifted block, as `((r, c), (r, c))` offsets from
/// the block origin. Coding-block boundaries sit between local rows 6|7 and
/// local columns 6|7.
#[rustfmt::skip]
type PixelPair = ((usize, usize), (usize, usize));

const INTER_PAIRS: [PixelPair; 12] = [
    // vertical boundary, upper half: rows 0..4
    ((0, 6), (0, 7)), ((1, 6), (1, 7)), ((2, 6), (2, 7)), ((3, 6), (3, 7)),
    // horizontal boundary, left half: cols 0..4
    ((7, 0), (6, 0)), ((7, 1), (6, 1)), ((7, 2), (6, 2)), ((7, 3), (6, 3)),
    // corner quadrant: two of each
    ((4, 6), (4, 7)), ((7, 6), (7, 7)), ((7, 4), (6, 4)), ((6, 7), (7, 7)),
];

#[rustfmt::skip]
const INTRA_PAIRS: [PixelPair; 12] = [
    ((0, 6), (0, 5)), ((1, 6), (1, 5)), ((2, 6), (2, 5)), ((3, 6), (3, 5)),
    ((5, 0), (6, 0)), ((5, 1), (6, 1)), ((5, 2), (6, 2)), ((5, 3), (6, 3)),
    ((4, 6), (4, 5)), ((7, 5), (7, 6)), ((5, 4), (6, 4)), ((5, 7), (6, 7)),
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Blockiness {
    pub inter: u64,
    pub intra: u64,
    /// `intra / inter`, `None` when `inter` is zero.
    pub metric: Option<f64>,
}

pub fn blockiness(frame: &Frame) -> Blockiness {
    let sum_pairs = |pairs: &[PixelPair], r0: usize, c0: usize| -> u64 {
        pairs
            .iter()
            .map(|&((ar, ac), (br, bc))| {
                let a = i64::from(frame.at(r0 + ar, c0 + ac));
                let b = i64::from(frame.at(r0 + br, c0 + bc));
                (a - b).unsigned_abs()
            })
            .sum()
    };
    let (mut inter, mut intra) = (0u64, 0u64);
    for (r0, c0) in shifted_origins(frame) {
        inter += sum_pairs(&INTER_PAIRS, r0, c0);
        intra += sum_pairs(&INTRA_PAIRS, r0, c0);
    }
    Blockiness {
        inter,
        intra,
        metric: (inter != 0).then(|| intra as f64 / inter as f64),
    }
}

/// Luminance sums of the shifted blocks, in raster order and sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockSummary {
    pub sums: Vec<u64>,
    pub sorted: Vec<u64>,
}

impl BlockSummary {
    pub fn new(frame: &Frame) -> Self {
        let sums: Vec<u64> = shifted_origins(frame)
            .map(|(r0, c0)| {
                (0..8)
                    .flat_map(|r| (0..8).map(move |c| (r, c)))
                    .map(|(r, c)| u64::from(frame.at(r0 + r, c0 + c)))
                    .sum()
            })
            .collect();
        let mut sorted = sums.clone();
        sorted.sort_unstable();
        Self { sums, sorted }
    }

    /// Block mean as an exact fraction `(sum, 64)`.
    pub fn mean(&self, i: usize) -> (u64, u64) {
        (self.sums[i], 64)
    }
}

/// Four smallest sums (missing slots filled with the min sentinel) and four
/// largest (missing slots filled with zero).
fn extremes(summary: &BlockSummary) -> ([u64; 4], [u64; 4]) {
    let mut lo = [u64::from(MIN_SENTINEL); 4];
    let mut hi = [0u64; 4];
    for (slot, v) in lo.iter_mut().zip(summary.sorted.iter()) {
        *slot = *v;
    }
    for (slot, v) in hi.iter_mut().zip(summary.sorted.iter().rev()) {
        *slot = *v;
    }
    (lo, hi)
}

/// Hardware exposure: eight extreme block sums, each shifted right by 2,
/// summed, then shifted right by 7.
pub fn exposure_hw(frame: &Frame) -> u64 {
    let (lo, hi) = extremes(&BlockSummary::new(frame));
    lo.iter().chain(hi.iter()).map(|v| v >> 2).sum::<u64>() >> 7
}

/// Exposure as the half-sum of the three darkest and three brightest block
/// means. Needs at least three shifted blocks.
pub fn exposure_float(frame: &Frame) -> Result<f64> {
    let s = BlockSummary::new(frame);
    let n = s.sorted.len();
    if n < 3 {
        return Err(Error::TooFewBlocks { blocks: n as u32 });
    }
    let dark: u64 = s.sorted[..3].iter().sum();
    let bright: u64 = s.sorted[n - 3..].iter().sum();
    // (bright/64 + dark/64) / 2, exact in f64 for these magnitudes.
    Ok((bright + dark) as f64 / 128.0)
}

pub fn blackout(frame: &Frame, cfg: &EngineConfig) -> bool {
    let s = BlockSummary::new(frame);
    let spread = s.sorted.last().unwrap() - s.sorted.first().unwrap();
    spread <= u64::from(cfg.th_blout)
}

/// Signed row differences of one 4x4 microblock: `row1 - row2`,
/// `row3 - row2`, `row3 - row4` for each column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InterlaceTest {
    pub d: [i16; 12],
}

impl InterlaceTest {
    pub fn at(frame: &Frame, r0: usize, c0: usize) -> Self {
        let px = |r: usize, c: usize| i16::from(frame.at(r0 + r, c0 + c));
        let mut d = [0i16; 12];
        for c in 0..4 {
            d[c] = px(0, c) - px(1, c);
            d[4 + c] = px(2, c) - px(1, c);
            d[8 + c] = px(2, c) - px(3, c);
        }
        Self { d }
    }

    /// All twelve differences nonzero and of one common sign.
    pub fn combed(&self) -> bool {
        let first = self.d[0].signum();
        first != 0 && self.d.iter().all(|v| v.signum() == first)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interlace {
    pub count: u64,
    pub metric: f64,
}

pub fn interlace(frame: &Frame) -> Interlace {
    let mut count = 0u64;
    let mut total = 0u64;
    for (r0, c0) in shifted_origins(frame) {
        for (dr, dc) in [(0, 0), (0, 4), (4, 0), (4, 4)] {
            total += 1;
            count += u64::from(InterlaceTest::at(frame, r0 + dr, c0 + dc).combed());
        }
    }
    Interlace {
        count,
        metric: count as f64 / total as f64,
    }
}

/// Everything the oracle knows about one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub blockiness: Blockiness,
    pub exposure_hw: u64,
    pub exposure_float: Option<f64>,
    pub blackout: bool,
    pub interlace: Interlace,
}

pub fn evaluate(frame: &Frame, cfg: &EngineConfig) -> OracleReport {
    OracleReport {
        blockiness: blockiness(frame),
        exposure_hw: exposure_hw(frame),
        exposure_float: exposure_float(frame).ok(),
        blackout: blackout(frame, cfg),
        interlace: interlace(frame),
    }
}
