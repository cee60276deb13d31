// probe: trajectory of the self-supervised objective on synthetic speakers
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use undiar_core::audio::*;
use undiar_core::cluster::{ahc, cut_by_count, largest_cluster, DistanceMatrix, Linkage};
use undiar_core::encoder::*;
use undiar_core::nncore::*;

fn diag_offdiag(zt: &Tensor<f32>, ztau: &Tensor<f32>) -> (f64, f64) {
    let (b, d) = (zt.shape()[0], zt.shape()[1]);
    let std = |z: &Tensor<f32>| -> Vec<f64> {
        let mut out = vec![0.0f64; b * d];
        for di in 0..d {
            let col: Vec<f64> = (0..b).map(|bi| z.data()[bi * d + di] as f64).collect();
            let m = col.iter().sum::<f64>() / b as f64;
            let v = col.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / b as f64;
            let w = 1.0 / (v + 1e-12).sqrt();
            for bi in 0..b {
                out[bi * d + di] = (col[bi] - m) * w;
            }
        }
        out
    };
    let a = std(zt);
    let c = std(ztau);
    let mut diag = 0.0;
    let mut off = 0.0;
    for i in 0..d {
        for j in 0..d {
            let mut r = 0.0;
            for bi in 0..b {
                r += a[bi * d + i] * c[bi * d + j];
            }
            r /= b as f64;
            if i == j {
                diag += (r - 1.0) * (r - 1.0);
            } else {
                off += r * r;
            }
        }
    }
    (diag, off)
}

fn purity(model: &Model<f32>, waves: &[Waveform], rttm: &[undiar_core::score::RttmRecord]) -> (f64, f64) {
    let mut purity_num = 0usize;
    let mut purity_den = 0usize;
    let mut margin_sum = 0.0;
    let mut margin_n = 0;
    for w in waves.iter().take(4) {
        let regions = regions_from_rttm(rttm, &w.source_id);
        let embs = embed_file(model, w, &regions, 250.0).unwrap();
        if embs.len() < 12 { continue; }
        let speaker_at = |t: f64| -> Option<&str> {
            rttm.iter()
                .find(|r| r.file_id == w.source_id && r.onset <= t && t < r.onset + r.duration)
                .map(|r| r.speaker.as_str())
        };
        let cos = |a: &[f64], b: &[f64]| -> f64 {
            let d: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
            let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
            let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
            d / (na * nb).max(1e-12)
        };
        let mut within = Vec::new();
        let mut cross = Vec::new();
        for i in 0..embs.len().min(60) {
            for j in (i + 1)..embs.len().min(60) {
                match (speaker_at(embs[i].center_time), speaker_at(embs[j].center_time)) {
                    (Some(a), Some(b)) => {
                        let c = cos(&embs[i].vector, &embs[j].vector);
                        if a == b { within.push(c) } else { cross.push(c) }
                    }
                    _ => {}
                }
            }
        }
        if !within.is_empty() && !cross.is_empty() {
            margin_sum += within.iter().sum::<f64>() / within.len() as f64
                - cross.iter().sum::<f64>() / cross.len() as f64;
            margin_n += 1;
        }
        let vectors: Vec<Vec<f64>> = embs.iter().map(|e| e.vector.clone()).collect();
        let d = DistanceMatrix::squared_euclidean(&vectors).unwrap();
        let labels = cut_by_count(&ahc(&d, Linkage::Average).unwrap(), 10.min(vectors.len())).unwrap();
        let (_, members) = largest_cluster(&labels);
        let mut counts: std::collections::BTreeMap<&str, usize> = Default::default();
        let mut total = 0;
        for &m in &members {
            if let Some(s) = speaker_at(embs[m].center_time) {
                *counts.entry(s).or_default() += 1;
                total += 1;
            }
        }
        if let Some((_, &mx)) = counts.iter().max_by_key(|(_, &c)| c) {
            purity_num += mx;
            purity_den += total;
        }
    }
    (
        purity_num as f64 / purity_den.max(1) as f64,
        margin_sum / margin_n.max(1) as f64,
    )
}

fn main() {
    set_jobs(2);
    let total_steps: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(60);
    let lr: f64 = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(2.0);
    let batch: usize = std::env::args().nth(3).and_then(|s| s.parse().ok()).unwrap_or(256);
    let trust: f64 = std::env::args().nth(4).and_then(|s| s.parse().ok()).unwrap_or(0.001);
    let lambda: f64 = std::env::args().nth(5).and_then(|s| s.parse().ok()).unwrap_or(1.0);

    let spec = ConversationSpec::default();
    let (waves, _rttm) = generate_synthetic_corpus(8, 6, &spec, 500);
    let corpus: Vec<(Waveform, Vec<SpeechRegion>)> = waves
        .iter()
        .map(|w| (w.clone(), energy_vad(w, &VadParams::default())))
        .collect();
    let dev_spec = ConversationSpec { split_salt: 9, ..ConversationSpec::default() };
    let (dev_waves, dev_rttm) = generate_synthetic_corpus(8, 2, &dev_spec, 500);

    let cfg = EncoderConfig { batch_size: batch, lambda, ..EncoderConfig::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut model: Model<f32> = Model::new(cfg.clone(), &mut rng).unwrap();
    let mut state = LarsState::new(model.params());
    let mut lars = LarsConfig::default();
    lars.lr_weight = lr;
    lars.lr_bias_bn = lr * 0.024;
    lars.trust_coefficient = trust;
    let sampler = PairSampler::new(&corpus, &cfg).unwrap();

    let (p0, m0) = purity(&model, &dev_waves, &dev_rttm);
    println!("step 0: purity {:.1}% margin {:.3} (untrained)", p0 * 100.0, m0);

    let warmup = (total_steps / 4).max(1);
    for step in 0..total_steps {
        let lr_scale = if step < warmup {
            (step + 1) as f64 / warmup as f64
        } else {
            0.5 * (1.0 + (std::f64::consts::PI * (step - warmup) as f64
                / (total_steps - warmup) as f64).cos())
        };
        let b = sampler.sample_batch::<f32>(batch, &mut rng);
        let (zt, tt) = model.forward_train(&b.view_t).unwrap();
        let (ztau, ttau) = model.forward_train(&b.view_tau).unwrap();
        let out = barlow_twins_loss(&zt, &ztau, cfg.lambda).unwrap();
        model.zero_grads();
        model.backward(&tt, &out.grad_t).unwrap();
        model.backward(&ttau, &out.grad_tau).unwrap();
        lars_step(model.params_mut(), &mut state, &lars, lr_scale).unwrap();
        if (step + 1) % 6 == 0 || step == 0 {
            let (diag, off) = diag_offdiag(&zt, &ztau);
            println!("step {}: loss {:.1} diag {:.1} offdiag {:.1} lr_scale {:.2}",
                step + 1, out.loss, diag, off, lr_scale);
        }
        if (step + 1) % 18 == 0 {
            let (p, m) = purity(&model, &dev_waves, &dev_rttm);
            println!("step {}: purity {:.1}% margin {:.3}", step + 1, p * 100.0, m);
        }
    }
    let (p, m) = purity(&model, &dev_waves, &dev_rttm);
    println!("final: purity {:.1}% margin {:.3}", p * 100.0, m);
}
