// the real acceptance path: train -> pseudo -> plda -> tune -> diarize -> DER
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use undiar_core::audio::*;
use undiar_core::cluster::{ahc, cut_by_threshold, Linkage};
use undiar_core::encoder::*;
use undiar_core::nncore::*;
use undiar_core::pipeline::*;
use undiar_core::plda::{fit_preprocessor, plda_train, WhitenSource};
use undiar_core::score::{der, RttmRecord};

fn main() {
    set_jobs(2);
    let steps: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(48);
    let seed = 1234u64;

    // train split: 8 speakers, salt 0; dev: salt 1; test 2-speaker: salt 2
    let train_spec = ConversationSpec { file_prefix: "train-".into(), ..Default::default() };
    let dev_spec = ConversationSpec { file_prefix: "dev-".into(), split_salt: 1, ..Default::default() };
    let test_spec = ConversationSpec {
        file_prefix: "test-".into(), split_salt: 2,
        speakers_per_conversation: (2, 2),
        turns_per_conversation: (8, 10),
        turn_seconds: (3.5, 5.5),
        ..Default::default()
    };
    let (train_waves, _) = generate_synthetic_corpus(8, 5, &train_spec, seed);
    let (dev_waves, dev_rttm) = generate_synthetic_corpus(8, 3, &dev_spec, seed);
    let (test_waves, test_rttm) = generate_synthetic_corpus(8, 3, &test_spec, seed);
    eprintln!("train {} dev {} test {} convs", train_waves.len(), dev_waves.len(), test_waves.len());

    let vad = VadParams::default();
    let corpus: Vec<(Waveform, Vec<SpeechRegion>)> = train_waves.iter()
        .map(|w| (w.clone(), energy_vad(w, &vad))).collect();

    let epochs = 6;
    let cfg = EncoderConfig {
        batch_size: 256,
        epochs,
        warmup_epochs: 2,
        steps_per_epoch_cap: steps / epochs,
        lambda: 0.005,
        ..EncoderConfig::default()
    };
    let mut opts = TrainOptions { seed, ..Default::default() };
    opts.lars.lr_weight = 2.0;
    opts.lars.lr_bias_bn = 0.048;
    opts.lars.trust_coefficient = 0.01;
    let t0 = std::time::Instant::now();
    let trained: TrainedEncoder<f32> = train(&cfg, &corpus, &opts).unwrap();
    eprintln!("trained {} steps in {:.0}s, loss {:.1} -> {:.1}",
        trained.log.len(), t0.elapsed().as_secs_f64(),
        trained.log.first().unwrap().loss, trained.log.last().unwrap().loss);

    // pseudo-labels on dev (energy VAD)
    let dev_files: Vec<(Waveform, Vec<SpeechRegion>)> = dev_waves.iter()
        .map(|w| (w.clone(), energy_vad(w, &vad))).collect();
    let pseudo = generate_pseudo_labels(&trained.model, &dev_files, 10, 250.0, Linkage::Average).unwrap();
    // purity vs ground truth
    let mut pure = 0usize; let mut tot = 0usize;
    for s in 0..pseudo.n_speakers() {
        let file = &pseudo.speaker_files[s];
        let mut counts: std::collections::BTreeMap<&str, usize> = Default::default();
        for &i in &pseudo.members(s) {
            if let Some(spk) = dev_rttm.iter().find(|r| &r.file_id == file
                && r.onset <= pseudo.vector_times[i] && pseudo.vector_times[i] < r.onset + r.duration)
                .map(|r| r.speaker.as_str()) {
                *counts.entry(spk).or_default() += 1;
            }
        }
        tot += counts.values().sum::<usize>();
        pure += counts.values().copied().max().unwrap_or(0);
    }
    eprintln!("pseudo: {} speakers, {} vectors, purity {:.1}%",
        pseudo.n_speakers(), pseudo.vectors.len(), 100.0 * pure as f64 / tot as f64);

    let pre = fit_preprocessor(&pseudo.vectors, &pseudo.labels, WhitenSource::TotalCovariance, true, None).unwrap();
    let prepared: Vec<Vec<f64>> = pseudo.vectors.iter().map(|v| pre.apply(v)).collect();
    let (plda, _) = plda_train(&prepared, &pseudo.labels, 10).unwrap();
    let scorer = plda.scorer();

    let params = TuningParams {
        n_utterances: 1000, grid_size: 200, grid_subsample: 300,
        speakers_per_utterance: (2, 2), ..TuningParams::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 99);
    let utts = synthesize_tuning_utterances(&pseudo, &params, &mut rng).unwrap();
    let tuned = tune_threshold(&utts, &scorer, &pre, &params).unwrap();
    let best = tuned.dev_der_curve.iter().map(|&(_, d)| d).fold(f64::INFINITY, f64::min);
    eprintln!("tuned threshold {:.1}, curve best {:.3}", tuned.threshold, best);

    // test: oracle VAD, threshold stopping
    let mut hyp: Vec<RttmRecord> = Vec::new();
    for w in &test_waves {
        let regions = regions_from_rttm(&test_rttm, &w.source_id);
        let embs = embed_file(&trained.model, w, &regions, 250.0).unwrap();
        // file zone diagnostic
        let vectors: Vec<Vec<f64>> = embs.iter().map(|e| e.vector.clone()).collect();
        let sim = build_similarity(&vectors, &scorer, &pre).unwrap();
        let d = row_distance(&sim);
        let dend = ahc(&d, Linkage::Average).unwrap();
        let m = dend.merges.len();
        let k_at = cut_by_threshold(&dend, tuned.threshold).iter().max().unwrap() + 1;
        eprintln!("  {} n={} zone2 [{:.0}, {:.0}] -> {} clusters",
            w.source_id, embs.len(), dend.merges[m-2].height, dend.merges[m-1].height, k_at);
        let h = diarize_embeddings(&w.source_id, &embs, &scorer, &pre,
            Stopping::Threshold(tuned.threshold), 250.0, Linkage::Average).unwrap();
        hyp.extend(h.to_rttm("1"));
    }
    let report = der(&test_rttm, &hyp, 0.25, true).unwrap();
    println!("END-TO-END DER {:.4} (miss {:.1} fa {:.1} conf {:.1} / {:.1}s)",
        report.der(), report.missed, report.false_alarm, report.confusion, report.scored_time);
}
