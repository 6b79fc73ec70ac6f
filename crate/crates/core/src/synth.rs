//! Seeded synthetic frames.
//!
//! Uniform noise alone almost never trips blackout or the interlace
//! detector, so the generator mixes several content families. Each family
//! pushes a different metric away from its trivial value.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ingest::{Frame, Resolution};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pattern {
    Noise,
    /// Constant 8x8 coding blocks plus light noise.
    Blocky,
    /// Alternating bright/dark rows with per-column jitter.
    Comb,
    /// Near-constant; block sums differ by only a few units.
    Flat,
    Constant,
    /// Mostly comb, with noisy and blocky patches.
    Mixed,
}

impl Pattern {
    pub const ALL: [Pattern; 6] = [
        Pattern::Noise,
        Pattern::Blocky,
        Pattern::Comb,
        Pattern::Flat,
        Pattern::Constant,
        Pattern::Mixed,
    ];
}

/// Deterministic per-trial seed derived from a base seed.
pub fn trial_seed(base: u64, trial: u64) -> u64 {
    // splitmix64 step
    let mut z = base.wrapping_add(trial.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn frame(rng: &mut impl Rng, res: Resolution, pattern: Pattern, index: u64) -> Frame {
    let (w, h) = (res.width() as usize, res.height() as usize);
    let mut luma = vec![0u8; w * h];
    match pattern {
        Pattern::Noise => rng.fill(&mut luma[..]),
        Pattern::Constant => luma.fill(rng.random()),
        Pattern::Flat => {
            let base: u8 = rng.random_range(0..=250);
            // A few pixels nudged by up to 5 keep the block-sum spread near the threshold.
            luma.fill(base);
            let bumps = rng.random_range(0..=6);
            for _ in 0..bumps {
                let i = rng.random_range(0..luma.len());
                luma[i] = base + rng.random_range(0..=5);
            }
        }
        Pattern::Blocky => {
            let bw = w.div_ceil(8);
            let levels: Vec<u8> = (0..bw * h.div_ceil(8)).map(|_| rng.random()).collect();
            let amp: u8 = rng.random_range(0..=4);
            for (i, px) in luma.iter_mut().enumerate() {
                let (r, c) = (i / w, i % w);
                let jitter = if amp == 0 { 0 } else { rng.random_range(0..=amp) };
                *px = levels[(r / 8) * bw + c / 8].saturating_add(jitter);
            }
        }
        Pattern::Comb => fill_comb(rng, &mut luma, w),
        Pattern::Mixed => {
            fill_comb(rng, &mut luma, w);
            let patches = rng.random_range(1..=4);
            for _ in 0..patches {
                let (r0, c0) = (rng.random_range(0..h), rng.random_range(0..w));
                let (ph, pw) = (rng.random_range(1..=12), rng.random_range(1..=12));
                let v: u8 = rng.random();
                for r in r0..(r0 + ph).min(h) {
                    for c in c0..(c0 + pw).min(w) {
                        luma[r * w + c] = if rng.random_bool(0.5) { v } else { rng.random() };
                    }
                }
            }
        }
    }
    Frame::new(index, res, luma).expect("plane sized from resolution")
}

fn fill_comb(rng: &mut impl Rng, luma: &mut [u8], w: usize) {
    let hi: u8 = rng.random_range(130..=255);
    let lo: u8 = rng.random_range(0..=120);
    let phase = rng.random_range(0..2);
    for (i, px) in luma.iter_mut().enumerate() {
        let base = if (i / w + phase).is_multiple_of(2) { hi } else { lo };
        let j: i16 = rng.random_range(-8..=8);
        *px = (i16::from(base) + j).clamp(0, 255) as u8;
    }
}

/// A random valid resolution with both dimensions in `lo..=hi`, multiples of 8.
pub fn resolution(rng: &mut impl Rng, lo: u32, hi: u32) -> Resolution {
    let mut pick = || 8 * rng.random_range(lo.div_ceil(8)..=hi / 8);
    let width = pick();
    let height = pick();
    Resolution::new(width, height).expect("bounds produce valid dimensions")
}

/// Reproducible test frame: size and content family both drawn from `seed`.
pub fn random_frame(seed: u64, lo: u32, hi: u32) -> Frame {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let res = resolution(&mut rng, lo, hi);
    let pattern = Pattern::ALL[rng.random_range(0..Pattern::ALL.len())];
    frame(&mut rng, res, pattern, 0)
}

/// Reproducible frame of a fixed resolution.
pub fn random_frame_at(seed: u64, res: Resolution, index: u64) -> Frame {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pattern = Pattern::ALL[rng.random_range(0..Pattern::ALL.len())];
    frame(&mut rng, res, pattern, index)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic() {
        assert_eq!(random_frame(42, 16, 128), random_frame(42, 16, 128));
        assert_ne!(trial_seed(1, 0), trial_seed(1, 1));
    }

    #[test]
    fn resolutions_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let r = resolution(&mut rng, 16, 128);
            assert!((16..=128).contains(&r.width()) && r.width() % 8 == 0);
            assert!((16..=128).contains(&r.height()) && r.height() % 8 == 0);
        }
    }
}
