//! Property tests for the DER scorer invariants.

mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use undiar_core::score::{der, RttmRecord};

#[test]
fn der_invariant_to_hypothesis_speaker_renaming() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..50 {
        let (reference, hypothesis) = common::random_rttm_pair(&mut rng, "f");
        let base = der(&reference, &hypothesis, 0.25, true).unwrap();
        let renamed: Vec<RttmRecord> = hypothesis
            .iter()
            .map(|r| RttmRecord {
                speaker: format!("renamed-{}", r.speaker),
                ..r.clone()
            })
            .collect();
        let after = der(&reference, &renamed, 0.25, true).unwrap();
        assert!(
            (base.der() - after.der()).abs() < 1e-12,
            "case {case}: {} vs {}",
            base.der(),
            after.der()
        );
    }
}

#[test]
fn spurious_hypothesis_in_silence_never_decreases_false_alarm() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut tested = 0;
    for _ in 0..200 {
        let (reference, hypothesis) = common::random_rttm_pair(&mut rng, "f");
        // find a stretch of reference silence past the last reference segment
        let ref_end = reference
            .iter()
            .map(|r| r.onset + r.duration)
            .fold(0.0f64, f64::max);
        let onset = ref_end + rng.gen_range(1.0..3.0);
        let duration = rng.gen_range(0.5..2.0);
        let mut extended = hypothesis.clone();
        extended.push(RttmRecord {
            file_id: "f".into(),
            channel: "1".into(),
            onset,
            duration,
            speaker: "spurious".into(),
        });
        let base = der(&reference, &hypothesis, 0.25, true).unwrap();
        let after = der(&reference, &extended, 0.25, true).unwrap();
        assert!(
            after.false_alarm >= base.false_alarm - 1e-12,
            "fa {} -> {}",
            base.false_alarm,
            after.false_alarm
        );
        tested += 1;
    }
    assert_eq!(tested, 200);
}
