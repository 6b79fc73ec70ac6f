//! Frame sources: headerless raw luma planes and YUV4MPEG2 files.
//!
//! Every source yields [`Frame`]s carrying only the 8-bit luma plane. Chroma
//! planes in y4m input are skipped byte-exactly and never materialized.

use std::fs::File;
use std::io::{self, BufRead, BufReader, Read};
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Frame dimensions in pixels.
///
/// Both dimensions are multiples of 8 and at least 16, so the shifted block
/// grid always holds at least one block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Resolution {
    width: u32,
    height: u32,
}

impl Resolution {
    /// Largest dimension the 16-bit fields of the stream header can carry.
    pub const MAX_DIMENSION: u32 = u16::MAX as u32;

    pub fn new(width: u32, height: u32) -> Result<Self> {
        let ok = |d: u32| d.is_multiple_of(8) && (16..=Self::MAX_DIMENSION).contains(&d);
        if ok(width) && ok(height) {
            Ok(Self { width, height })
        } else {
            Err(Error::ResolutionInvalid { width, height })
        }
    }

    #[inline]
    pub fn width(self) -> u32 {
        self.width
    }

    #[inline]
    pub fn height(self) -> u32 {
        self.height
    }

    /// Bytes in one luma plane.
    #[inline]
    pub fn plane_len(self) -> usize {
        self.width as usize * self.height as usize
    }
}

impl std::fmt::Display for Resolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}", self.width, self.height)
    }
}

impl std::str::FromStr for Resolution {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let (w, h) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| format!("expected WIDTHxHEIGHT, got {s:?}"))?;
        let w = w.trim().parse().map_err(|e| format!("bad width in {s:?}: {e}"))?;
        let h = h.trim().parse().map_err(|e| format!("bad height in {s:?}: {e}"))?;
        Resolution::new(w, h).map_err(|e| e.to_string())
    }
}

/// One video frame's luma plane, row-major.
///
/// The plane is reference counted so frames can be handed between lanes (or
/// replayed by the benchmark) without copying.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    index: u64,
    resolution: Resolution,
    luma: Arc<[u8]>,
}

impl Frame {
    pub fn new(index: u64, resolution: Resolution, luma: impl Into<Arc<[u8]>>) -> Result<Self> {
        let luma = luma.into();
        if luma.len() != resolution.plane_len() {
            return Err(Error::TruncatedFrame {
                index,
                got: luma.len(),
                expected: resolution.plane_len(),
            });
        }
        Ok(Self {
            index,
            resolution,
            luma,
        })
    }

    #[inline]
    pub fn index(&self) -> u64 {
        self.index
    }

    #[inline]
    pub fn resolution(&self) -> Resolution {
        self.resolution
    }

    #[inline]
    pub fn luma(&self) -> &[u8] {
        &self.luma
    }

    /// Sample at 0-based `(row, col)`.
    #[inline]
    pub fn at(&self, row: usize, col: usize) -> u8 {
        self.luma[row * self.resolution.width as usize + col]
    }

    /// Same pixels, different ordinal.
    pub fn with_index(&self, index: u64) -> Self {
        Self {
            index,
            resolution: self.resolution,
            luma: Arc::clone(&self.luma),
        }
    }
}

/// A sequential, single-consumer stream of frames of one resolution.
pub trait FrameSource {
    fn resolution(&self) -> Resolution;

    /// Next frame, or `Ok(None)` at the exact end of data. Once an error has
    /// been returned the source is exhausted.
    fn next_frame(&mut self) -> Result<Option<Frame>>;
}

impl<S: FrameSource + ?Sized> FrameSource for Box<S> {
    fn resolution(&self) -> Resolution {
        (**self).resolution()
    }

    fn next_frame(&mut self) -> Result<Option<Frame>> {
        (**self).next_frame()
    }
}

/// Reads until `buf` is full or EOF; returns the number of bytes read.
fn read_full<R: Read + ?Sized>(reader: &mut R, buf: &mut [u8]) -> io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match reader.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(filled)
}

/// Concatenated headerless luma planes.
pub struct RawSource<R> {
    reader: R,
    resolution: Resolution,
    next_index: u64,
    done: bool,
}

impl<R: Read> RawSource<R> {
    pub fn new(reader: R, resolution: Resolution) -> Self {
        Self {
            reader,
            resolution,
            next_index: 0,
            done: false,
        }
    }
}

impl<R: Read> FrameSource for RawSource<R> {
    fn resolution(&self) -> Resolution {
        self.resolution
    }

    fn next_frame(&mut self) -> Result<Option<Frame>> {
        if self.done {
            return Ok(None);
        }
        let mut plane = vec![0u8; self.resolution.plane_len()];
        let got = match read_full(&mut self.reader, &mut plane) {
            Ok(n) => n,
            Err(e) => {
                self.done = true;
                return Err(e.into());
            }
        };
        if got == 0 {
            self.done = true;
            return Ok(None);
        }
        if got < plane.len() {
            self.done = true;
            return Err(Error::TruncatedFrame {
                index: self.next_index,
                got,
                expected: plane.len(),
            });
        }
        let frame = Frame::new(self.next_index, self.resolution, plane)?;
        self.next_index += 1;
        Ok(Some(frame))
    }
}

fn open_file(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|source| Error::FileUnreadable {
            path: path.to_path_buf(),
            source,
        })
}

/// Opens a headerless raw luma file of the given resolution.
pub fn open_raw_source(path: impl AsRef<Path>, resolution: Resolution) -> Result<RawSource<BufReader<File>>> {
    Ok(RawSource::new(open_file(path.as_ref())?, resolution))
}

const Y4M_MAGIC: &str = "YUV4MPEG2";
const Y4M_MAX_LINE: usize = 4096;

/// Bytes following the luma plane in each y4m frame, by colorspace tag.
fn y4m_trailing_planes(colorspace: &str, width: usize, height: usize) -> Option<usize> {
    let (cw, ch) = (width.div_ceil(2), height.div_ceil(2));
    Some(match colorspace {
        "420" | "420jpeg" | "420paldv" | "420mpeg2" => 2 * cw * ch,
        "422" => 2 * cw * height,
        "444" => 2 * width * height,
        "444alpha" => 3 * width * height,
        "mono" => 0,
        _ => return None,
    })
}

/// YUV4MPEG2 stream; only the luma plane of each frame is kept.
pub struct Y4mSource<R> {
    reader: R,
    resolution: Resolution,
    skip: usize,
    next_index: u64,
    done: bool,
}

/// Reads one `\n`-terminated line. `Ok(None)` at clean EOF before any byte.
fn read_line<R: BufRead>(reader: &mut R, what: &str) -> Result<Option<String>> {
    let mut line = Vec::new();
    let n = reader
        .by_ref()
        .take(Y4M_MAX_LINE as u64)
        .read_until(b'\n', &mut line)?;
    if n == 0 {
        return Ok(None);
    }
    if line.last() != Some(&b'\n') {
        return Err(Error::HeaderMalformed(format!("unterminated {what} line")));
    }
    line.pop();
    String::from_utf8(line)
        .map(Some)
        .map_err(|_| Error::HeaderMalformed(format!("{what} line is not ASCII")))
}

impl<R: BufRead> Y4mSource<R> {
    pub fn new(mut reader: R) -> Result<Self> {
        let header = read_line(&mut reader, "stream header")?
            .ok_or_else(|| Error::HeaderMalformed("empty input".into()))?;
        let mut tokens = header.split_ascii_whitespace();
        if tokens.next() != Some(Y4M_MAGIC) {
            return Err(Error::HeaderMalformed(format!("missing {Y4M_MAGIC} signature")));
        }

        let (mut width, mut height) = (None, None);
        let mut colorspace = "420jpeg".to_string();
        for tok in tokens {
            let (tag, value) = tok.split_at(1);
            let dim = || {
                value
                    .parse::<u32>()
                    .map_err(|_| Error::HeaderMalformed(format!("bad dimension token {tok:?}")))
            };
            match tag {
                "W" => width = Some(dim()?),
                "H" => height = Some(dim()?),
                "C" => colorspace = value.to_string(),
                // F (rate), I (interlacing), A (aspect), X (extension) don't affect layout.
                _ => {}
            }
        }
        let (width, height) = match (width, height) {
            (Some(w), Some(h)) => (w, h),
            _ => return Err(Error::HeaderMalformed("missing W or H".into())),
        };
        let resolution = Resolution::new(width, height)?;
        let skip = y4m_trailing_planes(&colorspace, width as usize, height as usize)
            .ok_or(Error::UnsupportedColorspace(colorspace))?;

        Ok(Self {
            reader,
            resolution,
            skip,
            next_index: 0,
            done: false,
        })
    }

    fn read_frame(&mut self) -> Result<Option<Frame>> {
        let Some(marker) = read_line(&mut self.reader, "frame header")? else {
            return Ok(None);
        };
        if marker.split_ascii_whitespace().next() != Some("FRAME") {
            return Err(Error::HeaderMalformed(format!(
                "expected FRAME marker before frame {}",
                self.next_index
            )));
        }

        let expected = self.resolution.plane_len();
        let mut plane = vec![0u8; expected];
        let got = read_full(&mut self.reader, &mut plane)?;
        if got < expected {
            return Err(Error::TruncatedFrame {
                index: self.next_index,
                got,
                expected,
            });
        }
        let skipped = io::copy(&mut self.reader.by_ref().take(self.skip as u64), &mut io::sink())?;
        if skipped < self.skip as u64 {
            return Err(Error::TruncatedFrame {
                index: self.next_index,
                got: expected + skipped as usize,
                expected: expected + self.skip,
            });
        }

        let frame = Frame::new(self.next_index, self.resolution, plane)?;
        self.next_index += 1;
        Ok(Some(frame))
    }
}

impl<R: BufRead> FrameSource for Y4mSource<R> {
    fn resolution(&self) -> Resolution {
        self.resolution
    }

    fn next_frame(&mut self) -> Result<Option<Frame>> {
        if self.done {
            return Ok(None);
        }
        let res = self.read_frame();
        if !matches!(res, Ok(Some(_))) {
            self.done = true;
        }
        res
    }
}

/// Opens a YUV4MPEG2 file and parses its stream header.
pub fn open_y4m_source(path: impl AsRef<Path>) -> Result<Y4mSource<BufReader<File>>> {
    Y4mSource::new(open_file(path.as_ref())?)
}

/// Frames already in memory, replayed in order.
pub struct MemorySource {
    resolution: Resolution,
    frames: std::vec::IntoIter<Frame>,
}

impl MemorySource {
    /// All frames must share `resolution`.
    pub fn new(resolution: Resolution, frames: Vec<Frame>) -> Result<Self> {
        if let Some(f) = frames.iter().find(|f| f.resolution() != resolution) {
            return Err(Error::ResolutionMismatch {
                expected_width: resolution.width(),
                expected_height: resolution.height(),
                width: f.resolution().width(),
                height: f.resolution().height(),
            });
        }
        Ok(Self {
            resolution,
            frames: frames.into_iter(),
        })
    }
}

impl FrameSource for MemorySource {
    fn resolution(&self) -> Resolution {
        self.resolution
    }

    fn next_frame(&mut self) -> Result<Option<Frame>> {
        Ok(self.frames.next())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn res(w: u32, h: u32) -> Resolution {
        Resolution::new(w, h).unwrap()
    }

    fn drain<S: FrameSource>(src: &mut S) -> (Vec<Frame>, Option<Error>) {
        let mut frames = Vec::new();
        loop {
            match src.next_frame() {
                Ok(Some(f)) => frames.push(f),
                Ok(None) => return (frames, None),
                Err(e) => return (frames, Some(e)),
            }
        }
    }

    #[test]
    fn resolution_constraints() {
        assert!(Resolution::new(16, 16).is_ok());
        assert!(Resolution::new(7680, 4320).is_ok());
        assert!(matches!(Resolution::new(20, 16), Err(Error::ResolutionInvalid { .. })));
        assert!(matches!(Resolution::new(8, 16), Err(Error::ResolutionInvalid { .. })));
        assert!(matches!(Resolution::new(16, 0), Err(Error::ResolutionInvalid { .. })));
        assert!(Resolution::new(65536, 16).is_err());
        assert_eq!("320x240".parse::<Resolution>().unwrap(), res(320, 240));
        assert!("320x241".parse::<Resolution>().is_err());
        assert!("320".parse::<Resolution>().is_err());
    }

    #[test]
    fn raw_two_frames_then_end() {
        let data: Vec<u8> = (0..512u32).map(|i| i as u8).collect();
        let mut src = RawSource::new(Cursor::new(data.clone()), res(16, 16));
        let f0 = src.next_frame().unwrap().unwrap();
        assert_eq!(f0.index(), 0);
        assert_eq!(f0.luma(), &data[..256]);
        let f1 = src.next_frame().unwrap().unwrap();
        assert_eq!(f1.index(), 1);
        assert_eq!(f1.luma(), &data[256..]);
        assert!(src.next_frame().unwrap().is_none());
        assert!(src.next_frame().unwrap().is_none());
    }

    #[test]
    fn raw_partial_plane_is_truncated() {
        let mut src = RawSource::new(Cursor::new(vec![0u8; 100]), res(16, 16));
        match src.next_frame() {
            Err(Error::TruncatedFrame { index: 0, got: 100, expected: 256 }) => {}
            other => panic!("unexpected {other:?}"),
        }
        assert!(src.next_frame().unwrap().is_none());

        let mut src = RawSource::new(Cursor::new(vec![0u8; 384]), res(16, 16));
        let (frames, err) = drain(&mut src);
        assert_eq!(frames.len(), 1);
        assert!(matches!(err, Some(Error::TruncatedFrame { index: 1, .. })));
    }

    #[test]
    fn open_raw_errors() {
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("nope.yuv");
        assert!(matches!(
            open_raw_source(&missing, res(16, 16)),
            Err(Error::FileUnreadable { .. })
        ));
    }

    fn y4m(header: &str, frames: &[(&[u8], usize)]) -> Vec<u8> {
        let mut out = format!("{header}\n").into_bytes();
        for (luma, chroma) in frames {
            out.extend_from_slice(b"FRAME\n");
            out.extend_from_slice(luma);
            out.extend(std::iter::repeat_n(0xAAu8, *chroma));
        }
        out
    }

    #[test]
    fn y4m_420_skips_chroma() {
        let luma: Vec<u8> = (0..256u32).map(|i| (i * 7) as u8).collect();
        let data = y4m("YUV4MPEG2 W16 H16 F30:1 Ip A1:1 C420jpeg", &[(&luma, 128)]);
        let mut src = Y4mSource::new(Cursor::new(data)).unwrap();
        assert_eq!(src.resolution(), res(16, 16));
        let (frames, err) = drain(&mut src);
        assert!(err.is_none());
        assert_eq!(frames.len(), 1);
        assert_eq!(frames[0].luma(), &luma[..]);
    }

    #[test]
    fn y4m_other_layouts() {
        let luma = vec![9u8; 256];
        for (cs, chroma) in [("C422", 256), ("C444", 512), ("Cmono", 0), ("C420mpeg2", 128)] {
            let header = format!("YUV4MPEG2 W16 H16 {cs}");
            let data = y4m(&header, &[(&luma, chroma), (&luma, chroma)]);
            let (frames, err) = drain(&mut Y4mSource::new(Cursor::new(data)).unwrap());
            assert!(err.is_none(), "{cs}: {err:?}");
            assert_eq!(frames.len(), 2, "{cs}");
            assert_eq!(frames[1].index(), 1);
        }
        // No C tag defaults to 4:2:0.
        let data = y4m("YUV4MPEG2 W16 H16", &[(&luma, 128)]);
        assert_eq!(drain(&mut Y4mSource::new(Cursor::new(data)).unwrap()).0.len(), 1);
    }

    #[test]
    fn y4m_header_errors() {
        let bad = |h: &str| Y4mSource::new(Cursor::new(format!("{h}\n").into_bytes())).err();
        assert!(matches!(bad("YUV4MPEG2 W20 H16 C420"), Some(Error::ResolutionInvalid { .. })));
        assert!(matches!(bad("YUV4MPEG2 W16 C420"), Some(Error::HeaderMalformed(_))));
        assert!(matches!(bad("YUV4MPEG W16 H16"), Some(Error::HeaderMalformed(_))));
        assert!(matches!(bad("YUV4MPEG2 W16 H16 C420p10"), Some(Error::UnsupportedColorspace(_))));
        assert!(matches!(bad("YUV4MPEG2 Wabc H16"), Some(Error::HeaderMalformed(_))));
        assert!(matches!(
            Y4mSource::new(Cursor::new(Vec::new())).err(),
            Some(Error::HeaderMalformed(_))
        ));
    }

    #[test]
    fn y4m_missing_frame_marker() {
        let luma = vec![1u8; 256];
        let mut data = y4m("YUV4MPEG2 W16 H16 C420", &[(&luma, 128)]);
        data.extend_from_slice(b"FRAMX\n");
        data.extend_from_slice(&luma);
        let (frames, err) = drain(&mut Y4mSource::new(Cursor::new(data)).unwrap());
        assert_eq!(frames.len(), 1);
        assert!(matches!(err, Some(Error::HeaderMalformed(_))));
    }

    #[test]
    fn y4m_truncated_chroma() {
        let luma = vec![1u8; 256];
        let mut data = y4m("YUV4MPEG2 W16 H16 C420", &[(&luma, 128)]);
        data.truncate(data.len() - 1);
        let (frames, err) = drain(&mut Y4mSource::new(Cursor::new(data)).unwrap());
        assert!(frames.is_empty());
        assert!(matches!(err, Some(Error::TruncatedFrame { index: 0, .. })));
    }

    #[test]
    fn memory_source_rejects_mixed_sizes() {
        let a = Frame::new(0, res(16, 16), vec![0u8; 256]).unwrap();
        let b = Frame::new(1, res(24, 16), vec![0u8; 384]).unwrap();
        assert!(MemorySource::new(res(16, 16), vec![a, b]).is_err());
    }
}
