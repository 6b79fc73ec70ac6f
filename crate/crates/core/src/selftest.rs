//! Randomized engine-versus-oracle equivalence check.

use crate::engine::{self, EngineConfig, MetricRecord};
use crate::error::Result;
use crate::ingest::{Frame, Resolution};
use crate::oracle;
use crate::synth;

/// Frame dimensions are drawn from multiples of 8 in this range.
pub const MIN_DIM: u32 = 16;
pub const MAX_DIM: u32 = 128;

/// First field on which engine and oracle disagree for one frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mismatch {
    pub trial: u64,
    pub seed: u64,
    pub resolution: Resolution,
    pub field: &'static str,
    pub engine: String,
    pub oracle: String,
}

impl std::fmt::Display for Mismatch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "trial {} (frame seed {:#018x}, {}): {} engine={} oracle={}",
            self.trial, self.seed, self.resolution, self.field, self.engine, self.oracle
        )
    }
}

#[derive(Debug, Clone, Default)]
pub struct SelftestReport {
    pub trials: u64,
    pub failures: u64,
    pub first_failure: Option<Mismatch>,
    /// Mean of the 4+4 block-sum exposure over all trials.
    pub mean_exposure_hw: f64,
    /// Mean of the 3+3 block-mean exposure over trials with at least three
    /// shifted blocks.
    pub mean_exposure_float: f64,
}

impl SelftestReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// Compares one engine record against the oracle on the five hardware
/// outputs. Returns the first disagreeing field.
pub fn compare(frame: &Frame, rec: MetricRecord, cfg: &EngineConfig) -> Option<(&'static str, String, String)> {
    let b = oracle::blockiness(frame);
    let checks: [(&'static str, u64, u64); 5] = [
        ("inter_sum", rec.inter_sum().into(), b.inter),
        ("intra_sum", rec.intra_sum().into(), b.intra),
        ("exposure", rec.exposure().into(), oracle::exposure_hw(frame)),
        ("blackout", rec.blackout().into(), oracle::blackout(frame, cfg).into()),
        ("interlace_count", rec.interlace_count().into(), oracle::interlace(frame).count),
    ];
    checks
        .into_iter()
        .find(|(_, e, o)| e != o)
        .map(|(name, e, o)| (name, e.to_string(), o.to_string()))
}

/// Runs `trials` seeded frames through `analyze` and the oracle.
pub fn run_with<F>(seed: u64, trials: u64, cfg: &EngineConfig, analyze: F) -> SelftestReport
where
    F: Fn(&Frame) -> Result<MetricRecord>,
{
    let mut report = SelftestReport {
        trials,
        ..Default::default()
    };
    let (mut hw_total, mut float_total, mut float_n) = (0u64, 0f64, 0u64);

    for trial in 0..trials {
        let frame_seed = synth::trial_seed(seed, trial);
        let frame = synth::random_frame(frame_seed, MIN_DIM, MAX_DIM);
        let outcome = match analyze(&frame) {
            Ok(rec) => compare(&frame, rec, cfg),
            Err(e) => Some(("engine error", e.to_string(), "-".into())),
        };
        if let Some((field, engine, oracle)) = outcome {
            report.failures += 1;
            report.first_failure.get_or_insert(Mismatch {
                trial,
                seed: frame_seed,
                resolution: frame.resolution(),
                field,
                engine,
                oracle,
            });
        }
        hw_total += oracle::exposure_hw(&frame);
        if let Ok(v) = oracle::exposure_float(&frame) {
            float_total += v;
            float_n += 1;
        }
    }
    if trials > 0 {
        report.mean_exposure_hw = hw_total as f64 / trials as f64;
    }
    if float_n > 0 {
        report.mean_exposure_float = float_total / float_n as f64;
    }
    report
}

pub fn run(seed: u64, trials: u64) -> SelftestReport {
    let cfg = EngineConfig::default();
    run_with(seed, trials, &cfg, |f| engine::frame_record(f, &cfg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::Engine;
    use crate::wire::{self, DataWord, GridGeometry};

    #[test]
    fn vacuous_pass() {
        let r = run(1, 0);
        assert!(r.passed());
        assert_eq!(r.trials, 0);
    }

    #[test]
    fn seed_one_passes() {
        let r = run(1, 100);
        assert!(r.passed(), "{:?}", r.first_failure);
    }

    /// Drops the first payload word and pads with a zero word, so every
    /// microblock reaches the engine one dispatch slot early.
    fn off_by_one(frame: &Frame, cfg: &EngineConfig) -> Result<MetricRecord> {
        let mut e = Engine::new(GridGeometry::new(frame.resolution()), *cfg);
        for w in wire::serialize_frame(frame).skip(2) {
            e.consume_word(w)?;
        }
        e.consume_word(DataWord(0))?;
        e.finalize_frame()
    }

    #[test]
    fn detects_injected_dispatch_fault() {
        let cfg = EngineConfig::default();
        let r = run_with(1, 100, &cfg, |f| off_by_one(f, &cfg));
        assert!(!r.passed());
        let m = r.first_failure.unwrap();
        // The reported seed reproduces the failing frame.
        let frame = synth::random_frame(m.seed, MIN_DIM, MAX_DIM);
        assert_eq!(frame.resolution(), m.resolution);
        assert!(compare(&frame, off_by_one(&frame, &cfg).unwrap(), &cfg).is_some());
    }
}
