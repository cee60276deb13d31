// probe each pipeline stage with oracle spectral features
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use undiar_core::audio::fft::log_band_spectrum;
use undiar_core::audio::*;
use undiar_core::cluster::{ahc, cut_by_threshold, Linkage};
use undiar_core::encoder::Embedding;
use undiar_core::pipeline::*;
use undiar_core::plda::{fit_preprocessor, plda_train, WhitenSource};

fn spectral(w: &Waveform, regions: &[SpeechRegion]) -> Vec<Embedding> {
    extract_segments(w, regions, 500.0, 250.0)
        .into_iter()
        .map(|seg| Embedding {
            vector: log_band_spectrum(
                &w.samples[seg.start_sample..seg.start_sample + seg.length],
                16000, 48, 5000.0,
            ),
            center_time: seg.center_time,
        })
        .collect()
}

fn main() {
    let dev_spec = ConversationSpec { split_salt: 3, ..ConversationSpec::default() };
    let (dev_waves, dev_rttm) = generate_synthetic_corpus(6, 4, &dev_spec, 77);

    let per_file: Vec<(String, Vec<Embedding>)> = dev_waves.iter().map(|w| {
        let regions = regions_from_rttm(&dev_rttm, &w.source_id);
        (w.source_id.clone(), spectral(w, &regions))
    }).collect();
    let pseudo = pseudo_labels_from_embeddings(&per_file, 10, Linkage::Average).unwrap();
    println!("pseudo: {} speakers, {} vectors", pseudo.n_speakers(), pseudo.vectors.len());

    // purity of each pseudo-speaker vs ground truth
    let speaker_at = |file: &str, t: f64| -> Option<&str> {
        dev_rttm.iter()
            .find(|r| r.file_id == file && r.onset <= t && t < r.onset + r.duration)
            .map(|r| r.speaker.as_str())
    };
    let mut pure = 0usize;
    let mut tot = 0usize;
    for s in 0..pseudo.n_speakers() {
        let file = &pseudo.speaker_files[s];
        let mut counts: std::collections::BTreeMap<&str, usize> = Default::default();
        for &i in &pseudo.members(s) {
            if let Some(spk) = speaker_at(file, pseudo.vector_times[i]) {
                *counts.entry(spk).or_default() += 1;
            }
        }
        let n: usize = counts.values().sum();
        let mx = counts.values().copied().max().unwrap_or(0);
        if s < 6 { println!("  pseudo {s} ({file}): {counts:?}"); }
        pure += mx;
        tot += n;
    }
    println!("pseudo purity: {:.1}%", 100.0 * pure as f64 / tot as f64);

    let pre = fit_preprocessor(&pseudo.vectors, &pseudo.labels, WhitenSource::TotalCovariance, true, None).unwrap();
    let prepared: Vec<Vec<f64>> = pseudo.vectors.iter().map(|v| pre.apply(v)).collect();
    let (plda, _) = plda_train(&prepared, &pseudo.labels, 10).unwrap();
    let scorer = plda.scorer();

    // LLR separation within vs across pseudo-speakers
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    use rand::Rng;
    let mut same = Vec::new();
    let mut diff = Vec::new();
    for _ in 0..2000 {
        let i = rng.gen_range(0..pseudo.vectors.len());
        let j = rng.gen_range(0..pseudo.vectors.len());
        if i == j { continue; }
        let llr = scorer.llr(&pre.apply(&pseudo.vectors[i]), &pre.apply(&pseudo.vectors[j]));
        if pseudo.labels[i] == pseudo.labels[j] { same.push(llr) } else { diff.push(llr) }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len().max(1) as f64;
    println!("llr same-pseudo {:.2} vs diff-pseudo {:.2}", mean(&same), mean(&diff));

    // good-zone statistics over many length-matched utterances
    let params = TuningParams { n_utterances: 40, grid_size: 40, ..TuningParams::default() };
    let utts = synthesize_tuning_utterances(&pseudo, &params, &mut rng).unwrap();
    let mut zones = Vec::new();
    for utt in &utts {
        let sim = build_similarity(&utt.vectors, &scorer, &pre).unwrap();
        let d = row_distance(&sim);
        let dend = ahc(&d, Linkage::Average).unwrap();
        let n_true = utt.labels.iter().collect::<std::collections::BTreeSet<_>>().len();
        // zone = (height of merge n-k_true, height of merge n-k_true+1):
        // thresholds in between give exactly k_true clusters
        let m = dend.merges.len();
        let lo = dend.merges[m - n_true].height;
        let hi = if n_true > 1 { dend.merges[m - n_true + 1].height } else { f64::MAX };
        // DER at the midpoint cut
        let hyp = cut_by_threshold(&dend, 0.5 * (lo + hi));
        let k_hyp = hyp.iter().max().unwrap() + 1;
        let mut overlap = vec![vec![0.0f64; k_hyp]; pseudo.n_speakers()];
        for (r, h) in utt.labels.iter().zip(&hyp) { overlap[*r][*h] += 1.0; }
        let assign = undiar_core::score::max_weight_assignment(&overlap);
        let correct: f64 = assign.iter().enumerate().filter_map(|(r, h)| h.map(|h| overlap[r][h])).sum();
        let mid_der = 1.0 - correct / utt.labels.len() as f64;
        zones.push((utt.labels.len(), n_true, lo, hi, mid_der));
    }
    zones.sort_by(|a, b| a.2.partial_cmp(&b.2).unwrap());
    println!("per-utterance zones (n, k, lo, hi, der@mid):");
    for z in zones.iter().take(12) {
        println!("  n={} k={} zone [{:.0}, {:.0}] der@mid {:.3}", z.0, z.1, z.2, z.3, z.4);
    }
    let max_lo = zones.iter().map(|z| z.2).fold(f64::MIN, f64::max);
    let min_hi = zones.iter().map(|z| z.3).fold(f64::MAX, f64::min);
    println!("zone intersection: [{max_lo:.0}, {min_hi:.0}] (empty if lo > hi)");


    // tuned threshold vs held-out test-file zones
    let params2 = TuningParams {
        n_utterances: 300, grid_size: 120, grid_subsample: 100,
        speakers_per_utterance: (2, 2), ..TuningParams::default()
    };
    let utts2 = synthesize_tuning_utterances(&pseudo, &params2, &mut rng).unwrap();
    let tuned = tune_threshold(&utts2, &scorer, &pre, &params2).unwrap();
    let best = tuned.dev_der_curve.iter().map(|&(_, d)| d).fold(f64::INFINITY, f64::min);
    println!("tuned threshold {:.0}, curve best {:.3}", tuned.threshold, best);

    let test_spec = ConversationSpec { split_salt: 4, speakers_per_conversation: (2, 2), ..ConversationSpec::default() };
    let (test_waves, test_rttm) = generate_synthetic_corpus(6, 2, &test_spec, 77);
    for w in test_waves.iter().take(6) {
        let regions = regions_from_rttm(&test_rttm, &w.source_id);
        let embs = spectral(w, &regions);
        let sim = build_similarity(
            &embs.iter().map(|e| e.vector.clone()).collect::<Vec<_>>(), &scorer, &pre).unwrap();
        let d = row_distance(&sim);
        let dend = ahc(&d, Linkage::Average).unwrap();
        let m = dend.merges.len();
        let zone_lo = dend.merges[m - 2].height;
        let zone_hi = dend.merges[m - 1].height;
        let n_at_t = {
            let labels = cut_by_threshold(&dend, tuned.threshold);
            labels.iter().max().unwrap() + 1
        };
        println!("  test {} n={} two-cluster zone [{:.0}, {:.0}] -> {} clusters at tuned t",
            w.source_id, embs.len(), zone_lo, zone_hi, n_at_t);
    }
}
