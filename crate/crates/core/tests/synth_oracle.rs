//! Sanity precondition for the end-to-end acceptance run: synthetic
//! speaker identity must be recoverable from segment spectra alone with
//! an oracle nearest-mean-log-spectrum classifier. If this fails, the
//! corpus carries no speaker signal and nothing downstream can work.

mod common;

use undiar_core::audio::fft::log_band_spectrum;
use undiar_core::audio::{
    extract_segments, generate_synthetic_corpus, regions_from_rttm, ConversationSpec,
};

#[test]
fn oracle_spectrum_classifier_recovers_speakers() {
    let spec = ConversationSpec::default();
    let (waves, rttm) = generate_synthetic_corpus(4, 3, &spec, 99);

    // per-segment band spectra labeled by ground truth
    let mut samples: Vec<(String, Vec<f64>)> = Vec::new();
    for w in &waves {
        let regions = regions_from_rttm(&rttm, &w.source_id);
        for seg in extract_segments(w, &regions, 500.0, 500.0) {
            let t = seg.center_time;
            let Some(speaker) = rttm
                .iter()
                .find(|r| {
                    r.file_id == w.source_id && r.onset <= t && t < r.onset + r.duration
                })
                .map(|r| r.speaker.clone())
            else {
                continue;
            };
            let audio = &w.samples[seg.start_sample..seg.start_sample + seg.length];
            samples.push((speaker, log_band_spectrum(audio, 16000, 64, 5000.0)));
        }
    }
    assert!(samples.len() > 200, "need a real sample base, got {}", samples.len());

    // train means on even segments, classify odd ones
    let mut means: std::collections::BTreeMap<String, (Vec<f64>, usize)> = Default::default();
    for (i, (speaker, spec)) in samples.iter().enumerate() {
        if i % 2 != 0 {
            continue;
        }
        let entry = means
            .entry(speaker.clone())
            .or_insert_with(|| (vec![0.0; spec.len()], 0));
        for (m, v) in entry.0.iter_mut().zip(spec) {
            *m += v;
        }
        entry.1 += 1;
    }
    let means: Vec<(String, Vec<f64>)> = means
        .into_iter()
        .map(|(s, (sum, n))| (s, sum.iter().map(|v| v / n as f64).collect()))
        .collect();
    assert_eq!(means.len(), 4, "all speakers in the training half");

    let mut correct = 0;
    let mut total = 0;
    for (i, (speaker, spec)) in samples.iter().enumerate() {
        if i % 2 == 0 {
            continue;
        }
        let predicted = means
            .iter()
            .min_by(|a, b| {
                let da: f64 = a.1.iter().zip(spec).map(|(x, y)| (x - y) * (x - y)).sum();
                let db: f64 = b.1.iter().zip(spec).map(|(x, y)| (x - y) * (x - y)).sum();
                da.partial_cmp(&db).unwrap()
            })
            .map(|(s, _)| s.clone())
            .unwrap();
        if &predicted == speaker {
            correct += 1;
        }
        total += 1;
    }
    let accuracy = correct as f64 / total as f64;
    assert!(
        accuracy > 0.95,
        "oracle classifier accuracy {accuracy:.3} on {total} segments"
    );
}
