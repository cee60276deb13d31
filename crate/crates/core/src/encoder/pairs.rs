//! Positive-pair sampling for self-supervised training.
//!
//! A pair is two fixed-length windows from the same speech region of the
//! same file, separated edge-to-edge by the configured gap (500 ms windows,
//! 500 ms apart by default, so centers sit 1000 ms apart). Regions shorter
//! than the eligibility minimum (3 s by default) never contribute.

use super::EncoderConfig;
use crate::audio::{SpeechRegion, Waveform};
use crate::nncore::{Scalar, Tensor};
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PairError {
    #[error("no speech region is long enough for pair sampling (need >= {need_seconds:.2} s)")]
    NoEligibleRegions { need_seconds: f64 },
}

/// One training batch: two aligned views plus per-row provenance.
pub struct PairBatch<T: Scalar> {
    pub view_t: Tensor<T>,
    pub view_tau: Tensor<T>,
    /// (source_id, first window center, second window center), seconds.
    pub provenance: Vec<(String, f64, f64)>,
}

struct EligibleRegion {
    file: usize,
    start_sample: usize,
    /// Number of valid pair start positions.
    positions: usize,
}

/// Precomputed sampling index over a corpus.
pub struct PairSampler<'a> {
    corpus: &'a [(Waveform, Vec<SpeechRegion>)],
    regions: Vec<EligibleRegion>,
    segment: usize,
    gap: usize,
}

impl<'a> PairSampler<'a> {
    pub fn new(
        corpus: &'a [(Waveform, Vec<SpeechRegion>)],
        config: &EncoderConfig,
    ) -> Result<Self, PairError> {
        let segment = config.segment_samples();
        let gap = config.pair_gap_samples();
        let span = config.pair_span_samples();
        let mut regions = Vec::new();
        for (file_idx, (w, file_regions)) in corpus.iter().enumerate() {
            let rate = w.sample_rate as f64;
            for r in file_regions {
                if r.duration < config.min_region_seconds {
                    continue;
                }
                let start = (r.onset * rate).round() as usize;
                let end = ((r.end() * rate).round() as usize).min(w.samples.len());
                if end < start + span {
                    continue;
                }
                regions.push(EligibleRegion {
                    file: file_idx,
                    start_sample: start,
                    positions: end - start - span + 1,
                });
            }
        }
        if regions.is_empty() {
            let need_seconds =
                config.min_region_seconds.max(span as f64 / 16_000.0);
            return Err(PairError::NoEligibleRegions { need_seconds });
        }
        Ok(PairSampler {
            corpus,
            regions,
            segment,
            gap,
        })
    }

    /// Total pair start positions across eligible regions; the epoch length
    /// derives from this.
    pub fn total_positions(&self) -> usize {
        self.regions.iter().map(|r| r.positions).sum()
    }

    /// Uniformly picks a region, then a start within it.
    pub fn sample_batch<T: Scalar>(&self, batch_size: usize, rng: &mut impl Rng) -> PairBatch<T> {
        let l = self.segment;
        let mut view_t = Tensor::zeros(&[batch_size, 1, l]);
        let mut view_tau = Tensor::zeros(&[batch_size, 1, l]);
        let mut provenance = Vec::with_capacity(batch_size);
        for b in 0..batch_size {
            let region = &self.regions[rng.gen_range(0..self.regions.len())];
            let offset = rng.gen_range(0..region.positions);
            let t0 = region.start_sample + offset;
            let tau0 = t0 + l + self.gap;
            let (w, _) = &self.corpus[region.file];
            for i in 0..l {
                view_t.data_mut()[b * l + i] = T::from_f64(w.samples[t0 + i]);
                view_tau.data_mut()[b * l + i] = T::from_f64(w.samples[tau0 + i]);
            }
            let rate = w.sample_rate as f64;
            provenance.push((
                w.source_id.clone(),
                (t0 as f64 + l as f64 / 2.0) / rate,
                (tau0 as f64 + l as f64 / 2.0) / rate,
            ));
        }
        PairBatch {
            view_t,
            view_tau,
            provenance,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn corpus_with_region(seconds: f64) -> Vec<(Waveform, Vec<SpeechRegion>)> {
        let n = (seconds * 16000.0).round() as usize;
        vec![(
            Waveform {
                samples: (0..n).map(|i| (i as f64 * 0.01).sin()).collect(),
                sample_rate: 16000,
                source_id: "f".into(),
            },
            vec![SpeechRegion {
                onset: 0.0,
                duration: seconds,
            }],
        )]
    }

    #[test]
    fn exactly_one_position_for_a_minimal_region() {
        // 1500 ms region fits 500+500+500 exactly once (eligibility relaxed)
        let corpus = corpus_with_region(1.5);
        let config = EncoderConfig {
            min_region_seconds: 0.0,
            ..EncoderConfig::default()
        };
        let sampler = PairSampler::new(&corpus, &config).unwrap();
        assert_eq!(sampler.total_positions(), 1);
    }

    #[test]
    fn three_second_rule_excludes_shorter_regions() {
        let corpus = corpus_with_region(2.999);
        let config = EncoderConfig::default();
        assert!(matches!(
            PairSampler::new(&corpus, &config),
            Err(PairError::NoEligibleRegions { .. })
        ));
    }

    #[test]
    fn sampled_pairs_satisfy_center_distance() {
        let corpus = corpus_with_region(5.0);
        let config = EncoderConfig::default();
        let sampler = PairSampler::new(&corpus, &config).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let batch: PairBatch<f64> = sampler.sample_batch(16, &mut rng);
        for (_, t, tau) in &batch.provenance {
            assert!(((tau - t) - 1.0).abs() < 1e-9, "center distance {}", tau - t);
        }
        assert_eq!(batch.view_t.shape(), &[16, 1, 8000]);
    }

    #[test]
    fn views_are_slices_of_the_source() {
        let corpus = corpus_with_region(4.0);
        let config = EncoderConfig::default();
        let sampler = PairSampler::new(&corpus, &config).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let batch: PairBatch<f64> = sampler.sample_batch(4, &mut rng);
        let w = &corpus[0].0;
        for b in 0..4 {
            let (_, t_center, _) = batch.provenance[b];
            let t0 = ((t_center - 0.25) * 16000.0).round() as usize;
            for i in 0..8000 {
                assert_eq!(batch.view_t.data()[b * 8000 + i], w.samples[t0 + i]);
            }
        }
    }
}
