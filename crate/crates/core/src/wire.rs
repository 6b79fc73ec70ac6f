//! The 128-bit word stream between frame producer and metrics engine.
//!
//! A frame travels as one header word carrying the resolution, followed by
//! four payload words per shifted block. Shifted blocks are 8x8 tiles offset
//! one pixel right and down from the coding grid, so every coding-block
//! boundary the blockiness metric samples lies inside a single tile. The
//! last 7 rows and columns of the frame fall outside the shifted grid.
//!
//! Tiles go out in raster order. Each tile is split into four 4x4
//! microblocks sent top-left, top-right, bottom-left, bottom-right. A
//! microblock's sixteen samples are ordered column-major (`p1..p4` is the
//! first column, top to bottom) and byte `k` of the word holds `p(k+1)`.

use crate::error::{Error, Result};
use crate::ingest::{Frame, Resolution};

/// Block counts derived from a resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridGeometry {
    /// Horizontal 8x8 coding blocks.
    pub blx: u32,
    /// Vertical 8x8 coding blocks.
    pub bly: u32,
    pub shifted_cols: u32,
    pub shifted_rows: u32,
    pub shifted_blocks: u32,
    pub microblocks: u32,
}

impl GridGeometry {
    pub fn new(res: Resolution) -> Self {
        let blx = res.width() / 8;
        let bly = res.height() / 8;
        let shifted_cols = blx - 1;
        let shifted_rows = bly - 1;
        let shifted_blocks = shifted_cols * shifted_rows;
        Self {
            blx,
            bly,
            shifted_cols,
            shifted_rows,
            shifted_blocks,
            microblocks: 4 * shifted_blocks,
        }
    }

    /// Header plus payload words for one frame.
    #[inline]
    pub fn words_per_frame(&self) -> u64 {
        1 + u64::from(self.microblocks)
    }

    pub fn resolution(&self) -> Resolution {
        Resolution::new(self.blx * 8, self.bly * 8).expect("geometry built from a valid resolution")
    }
}

pub fn grid_geometry(res: Resolution) -> GridGeometry {
    GridGeometry::new(res)
}

/// Sixteen luma samples of a 4x4 microblock in column-major order.
///
/// `px.0[0]` is `p1` (column 1, row 1), `px.0[3]` is `p4` (column 1, row 4),
/// `px.0[4]` is `p5` (column 2, row 1) and so on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MicroblockPixels(pub [u8; 16]);

impl MicroblockPixels {
    /// `p(n)` with the 1-based numbering used throughout the datapath.
    #[inline(always)]
    pub fn p(&self, n: usize) -> u8 {
        self.0[n - 1]
    }

    /// Sample at 0-based `(row, col)` within the microblock.
    #[inline(always)]
    pub fn at(&self, row: usize, col: usize) -> u8 {
        self.0[col * 4 + row]
    }
}

/// One 128-bit stream word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct DataWord(pub u128);

impl DataWord {
    /// Resolution header: width in bits 15:0, height in bits 31:16.
    pub fn header(res: Resolution) -> Self {
        DataWord(u128::from(res.width()) | (u128::from(res.height()) << 16))
    }

    /// Decodes a header word. Fails if reserved bits are set or the
    /// resolution is invalid.
    pub fn decode_header(self) -> Result<Resolution> {
        if self.0 >> 32 != 0 {
            return Err(Error::HeaderMalformed(format!(
                "stream header word {:#034x} has reserved bits set",
                self.0
            )));
        }
        Resolution::new((self.0 & 0xFFFF) as u32, ((self.0 >> 16) & 0xFFFF) as u32)
    }

    #[inline]
    pub fn to_le_bytes(self) -> [u8; 16] {
        self.0.to_le_bytes()
    }

    #[inline]
    pub fn from_le_bytes(bytes: [u8; 16]) -> Self {
        DataWord(u128::from_le_bytes(bytes))
    }
}

#[inline(always)]
pub fn pack_microblock(px: MicroblockPixels) -> DataWord {
    DataWord(u128::from_le_bytes(px.0))
}

#[inline(always)]
pub fn unpack_word(w: DataWord) -> MicroblockPixels {
    MicroblockPixels(w.0.to_le_bytes())
}

/// Position of a microblock inside its shifted block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum MicroblockKind {
    /// No coding-block boundary.
    TopLeft = 0,
    /// Carries a vertical boundary between its columns 3 and 4.
    TopRight = 1,
    /// Carries a horizontal boundary between its rows 3 and 4.
    BottomLeft = 2,
    /// Carries both boundaries (the corner).
    BottomRight = 3,
}

#[inline(always)]
pub fn microblock_kind(counter: u32) -> MicroblockKind {
    match counter & 3 {
        0 => MicroblockKind::TopLeft,
        1 => MicroblockKind::TopRight,
        2 => MicroblockKind::BottomLeft,
        _ => MicroblockKind::BottomRight,
    }
}

/// Frame-coordinate origin (0-based row, col) of payload word `k`.
#[inline]
fn microblock_origin(geom: &GridGeometry, k: u32) -> (usize, usize) {
    let block = k / 4;
    let quadrant = k % 4;
    let (u, v) = (block / geom.shifted_cols, block % geom.shifted_cols);
    let row = 1 + 8 * u as usize + if quadrant >= 2 { 4 } else { 0 };
    let col = 1 + 8 * v as usize + if quadrant & 1 == 1 { 4 } else { 0 };
    (row, col)
}

/// Lazily serialized word stream of one frame.
pub struct FrameWords<'a> {
    luma: &'a [u8],
    stride: usize,
    header: DataWord,
    geom: GridGeometry,
    next: u64,
}

impl<'a> FrameWords<'a> {
    pub fn geometry(&self) -> GridGeometry {
        self.geom
    }
}

impl Iterator for FrameWords<'_> {
    type Item = DataWord;

    #[inline]
    fn next(&mut self) -> Option<DataWord> {
        let pos = self.next;
        if pos >= self.geom.words_per_frame() {
            return None;
        }
        self.next += 1;
        if pos == 0 {
            return Some(self.header);
        }
        let (row, col) = microblock_origin(&self.geom, (pos - 1) as u32);
        let mut px = [0u8; 16];
        for r in 0..4 {
            let line = &self.luma[(row + r) * self.stride + col..][..4];
            for c in 0..4 {
                px[c * 4 + r] = line[c];
            }
        }
        Some(pack_microblock(MicroblockPixels(px)))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.geom.words_per_frame() - self.next) as usize;
        (left, Some(left))
    }
}

impl ExactSizeIterator for FrameWords<'_> {}

/// Word stream for `frame`: header then `4 * shifted_blocks` payload words.
pub fn serialize_frame(frame: &Frame) -> FrameWords<'_> {
    let res = frame.resolution();
    FrameWords {
        luma: frame.luma(),
        stride: res.width() as usize,
        header: DataWord::header(res),
        geom: GridGeometry::new(res),
        next: 0,
    }
}

/// Like [`serialize_frame`], but checks the frame against an expected
/// resolution first.
pub fn serialize_frame_checked(frame: &Frame, expected: Resolution) -> Result<FrameWords<'_>> {
    let res = frame.resolution();
    if res != expected {
        return Err(Error::ResolutionMismatch {
            expected_width: expected.width(),
            expected_height: expected.height(),
            width: res.width(),
            height: res.height(),
        });
    }
    Ok(serialize_frame(frame))
}

/// Rebuilds the shifted region of a frame from its full word sequence.
///
/// Returns the resolution and a full-size plane in which every pixel outside
/// the shifted region (row 0, column 0, the last 7 rows and columns) is zero.
pub fn deserialize_words(words: &[DataWord]) -> Result<(Resolution, Vec<u8>)> {
    let (header, payload) = words
        .split_first()
        .ok_or_else(|| Error::HeaderMalformed("empty word sequence".into()))?;
    let res = header.decode_header()?;
    let geom = GridGeometry::new(res);
    if payload.len() as u64 != u64::from(geom.microblocks) {
        return Err(Error::FrameIncomplete {
            expected: geom.microblocks,
            consumed: payload.len().min(u32::MAX as usize) as u32,
        });
    }
    let stride = res.width() as usize;
    let mut plane = vec![0u8; res.plane_len()];
    for (k, w) in payload.iter().enumerate() {
        let (row, col) = microblock_origin(&geom, k as u32);
        let px = unpack_word(*w);
        for r in 0..4 {
            for c in 0..4 {
                plane[(row + r) * stride + col + c] = px.at(r, c);
            }
        }
    }
    Ok((res, plane))
}
