//! Engine versus oracle on randomized frames, plus the metric invariants.

use proptest::prelude::*;
use vqmetrics::engine::{self, EngineConfig};
use vqmetrics::{oracle, selftest, synth, Frame, GridGeometry, Resolution};

fn cfg() -> EngineConfig {
    EngineConfig::default()
}

fn map_pixels(f: &Frame, op: impl Fn(u8) -> u8) -> Frame {
    let luma: Vec<u8> = f.luma().iter().map(|&p| op(p)).collect();
    Frame::new(f.index(), f.resolution(), luma).unwrap()
}

fn arb_frame() -> impl Strategy<Value = Frame> {
    (2u32..=16, 2u32..=16, any::<u64>()).prop_map(|(bw, bh, seed)| {
        let res = Resolution::new(bw * 8, bh * 8).unwrap();
        synth::random_frame_at(seed, res, 0)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn engine_matches_oracle(f in arb_frame()) {
        let rec = engine::frame_record(&f, &cfg()).unwrap();
        prop_assert_eq!(selftest::compare(&f, rec, &cfg()), None);
        let m = engine::analyze_frame(&f, &cfg()).unwrap();
        let o = oracle::interlace(&f);
        prop_assert_eq!(m.interlace, o.metric);
        prop_assert_eq!(m.blockiness, oracle::blockiness(&f).metric);
    }

    #[test]
    fn sums_respect_bounds(f in arb_frame()) {
        let g = GridGeometry::new(f.resolution());
        let rec = engine::frame_record(&f, &cfg()).unwrap();
        let bound = 12 * 255 * g.shifted_blocks;
        prop_assert!(rec.inter_sum() <= bound && rec.intra_sum() <= bound);
        prop_assert!(rec.interlace_count() <= g.microblocks);
        prop_assert!(rec.exposure() <= 32640);
        prop_assert_eq!(rec.bits() >> 113, 0);
    }

    #[test]
    fn inversion_preserves_boundary_and_comb_counts(f in arb_frame()) {
        let inv = map_pixels(&f, |p| 255 - p);
        let a = engine::frame_record(&f, &cfg()).unwrap();
        let b = engine::frame_record(&inv, &cfg()).unwrap();
        prop_assert_eq!(a.inter_sum(), b.inter_sum());
        prop_assert_eq!(a.intra_sum(), b.intra_sum());
        prop_assert_eq!(a.interlace_count(), b.interlace_count());
        prop_assert_eq!(oracle::interlace(&f).count, oracle::interlace(&inv).count);
    }

    #[test]
    fn offset_preserves_blackout(f in arb_frame(), c in 0u8..=255) {
        let (lo, hi) = f.luma().iter().fold((255u8, 0u8), |(l, h), &p| (l.min(p), h.max(p)));
        let shift = i16::from(c) - 128;
        prop_assume!(i16::from(lo) + shift >= 0 && i16::from(hi) + shift <= 255);
        let moved = map_pixels(&f, |p| (i16::from(p) + shift) as u8);
        let a = engine::frame_record(&f, &cfg()).unwrap();
        let b = engine::frame_record(&moved, &cfg()).unwrap();
        prop_assert_eq!(a.blackout(), b.blackout());
    }

    #[test]
    fn brightening_never_lowers_exposure(f in arb_frame(), c in 1u8..=40) {
        let hi = *f.luma().iter().max().unwrap();
        prop_assume!(u16::from(hi) + u16::from(c) <= 255);
        let up = map_pixels(&f, |p| p + c);
        prop_assert!(oracle::exposure_hw(&up) >= oracle::exposure_hw(&f));
        if let (Ok(a), Ok(b)) = (oracle::exposure_float(&f), oracle::exposure_float(&up)) {
            prop_assert!(b > a);
        }
    }

    #[test]
    fn constant_frames(v in 0u8..=255, bw in 3u32..=12, bh in 3u32..=12) {
        let res = Resolution::new(bw * 8, bh * 8).unwrap();
        let f = Frame::new(0, res, vec![v; res.plane_len()]).unwrap();
        let m = engine::analyze_frame(&f, &cfg()).unwrap();
        prop_assert_eq!(m.exposure, u16::from(v));
        prop_assert!(m.blackout);
        prop_assert_eq!(m.interlace_count, 0);
        prop_assert_eq!(m.blockiness, None);
    }

    #[test]
    fn state_resets_between_frames(a in arb_frame(), b_seed in any::<u64>()) {
        let b = synth::random_frame_at(b_seed, a.resolution(), 1);
        let geom = GridGeometry::new(a.resolution());
        let mut e = vqmetrics::Engine::new(geom, cfg());
        for f in [&a, &b] {
            for w in vqmetrics::serialize_frame(f).skip(1) {
                e.consume_word(w).unwrap();
            }
            let rec = e.finalize_frame().unwrap();
            prop_assert_eq!(rec, engine::frame_record(f, &cfg()).unwrap());
        }
    }
}

#[test]
fn generator_exercises_every_metric() {
    let (mut comb, mut black, mut blocky, mut undefined) = (0, 0, 0, 0);
    for t in 0..300 {
        let f = synth::random_frame(synth::trial_seed(7, t), 16, 128);
        let m = engine::analyze_frame(&f, &cfg()).unwrap();
        comb += usize::from(m.interlace_count > 0);
        black += usize::from(m.blackout);
        blocky += usize::from(m.blockiness.is_some_and(|b| b > 0.0));
        undefined += usize::from(m.blockiness.is_none());
    }
    assert!(comb > 30, "comb {comb}");
    assert!(black > 30, "blackout {black}");
    assert!(blocky > 30, "blocky {blocky}");
    assert!(undefined > 10, "undefined {undefined}");
}

#[test]
fn blackout_not_only_on_constant_frames() {
    // Some generated frames have spread 1..=4 and still count as blackout.
    let mut near = 0;
    for t in 0..400 {
        let f = synth::random_frame(synth::trial_seed(9, t), 16, 128);
        let s = oracle::BlockSummary::new(&f);
        let spread = s.sorted.last().unwrap() - s.sorted[0];
        if (1..=4).contains(&spread) {
            near += 1;
            assert!(engine::frame_record(&f, &cfg()).unwrap().blackout());
        }
    }
    assert!(near > 0);
}
