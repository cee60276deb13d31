//! Self-supervised training loop and file embedding.

use super::loss::{barlow_twins_loss, vicreg_loss, VicRegWeights};
use super::pairs::{PairError, PairSampler};
use super::{EncoderConfig, Model};
use crate::audio::{extract_segments, SpeechRegion, Waveform};
use crate::nncore::{lars_step, LarsConfig, LarsState, LrSchedule, NnError, Scalar, Tensor};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Pairs(#[from] PairError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error("training diverged at epoch {epoch} step {step}: loss {loss}")]
    Diverged { epoch: usize, step: usize, loss: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    Barlow,
    Vicreg,
}

impl std::str::FromStr for LossKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "barlow" => Ok(LossKind::Barlow),
            "vicreg" => Ok(LossKind::Vicreg),
            other => Err(format!("unknown loss {other:?} (barlow|vicreg)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOptions {
    pub lars: LarsConfig,
    pub loss: LossKind,
    pub vicreg_weights: VicRegWeights,
    pub seed: u64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            lars: LarsConfig::default(),
            loss: LossKind::Barlow,
            vicreg_weights: VicRegWeights::default(),
            seed: 0,
        }
    }
}

/// One line of the training log.
#[derive(Debug, Clone, Copy)]
pub struct TrainLogEntry {
    pub epoch: usize,
    pub step: usize,
    pub loss: f64,
    pub lr_scale: f64,
    pub degenerate_dims: usize,
}

pub struct TrainedEncoder<T: Scalar> {
    pub model: Model<T>,
    pub lars_state: LarsState<T>,
    pub log: Vec<TrainLogEntry>,
}

/// Trains an encoder on VAD-segmented audio. Deterministic for a fixed
/// seed; the job count only changes wall time, not results.
pub fn train<T: Scalar>(
    config: &EncoderConfig,
    corpus: &[(Waveform, Vec<SpeechRegion>)],
    options: &TrainOptions,
) -> Result<TrainedEncoder<T>, TrainError> {
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut model: Model<T> = Model::new(config.clone(), &mut rng)?;
    let mut lars_state = LarsState::new(model.params());
    let sampler = PairSampler::new(corpus, config)?;

    let steps_per_epoch = sampler
        .total_positions()
        .div_ceil(config.batch_size)
        .clamp(1, config.steps_per_epoch_cap);
    let schedule = LrSchedule::new(config.warmup_epochs, config.epochs);

    let mut log = Vec::with_capacity(config.epochs * steps_per_epoch);
    for epoch in 0..config.epochs {
        let lr_scale = schedule.lr_at(epoch);
        for step in 0..steps_per_epoch {
            let batch = sampler.sample_batch::<T>(config.batch_size, &mut rng);
            let (z_t, tape_t) = model.forward_train(&batch.view_t)?;
            let (z_tau, tape_tau) = model.forward_train(&batch.view_tau)?;

            let out = match options.loss {
                LossKind::Barlow => barlow_twins_loss(&z_t, &z_tau, config.lambda)?,
                LossKind::Vicreg => vicreg_loss(&z_t, &z_tau, options.vicreg_weights)?,
            };
            if !out.loss.is_finite() {
                return Err(TrainError::Diverged {
                    epoch,
                    step,
                    loss: out.loss,
                });
            }

            model.zero_grads();
            model.backward(&tape_t, &out.grad_t)?;
            model.backward(&tape_tau, &out.grad_tau)?;
            lars_step(model.params_mut(), &mut lars_state, &options.lars, lr_scale)?;

            log.push(TrainLogEntry {
                epoch,
                step,
                loss: out.loss,
                lr_scale,
                degenerate_dims: out.degenerate_dims,
            });
        }
    }

    Ok(TrainedEncoder {
        model,
        lars_state,
        log,
    })
}

/// An embedding paired with the center time of its source segment.
#[derive(Debug, Clone)]
pub struct Embedding {
    pub vector: Vec<f64>,
    pub center_time: f64,
}

/// Embeds every segment of a file in eval mode, ordered by time.
pub fn embed_file<T: Scalar>(
    model: &Model<T>,
    waveform: &Waveform,
    regions: &[SpeechRegion],
    hop_ms: f64,
) -> Result<Vec<Embedding>, NnError> {
    let segment_ms = model.config.segment_ms;
    let segments = extract_segments(waveform, regions, segment_ms, hop_ms);
    let l = model.config.segment_samples();
    let d = model.embedding_dim();
    let mut out = Vec::with_capacity(segments.len());
    // batch segments to keep the conv kernels busy without blowing memory
    for chunk in segments.chunks(256) {
        let mut batch = Tensor::zeros(&[chunk.len(), 1, l]);
        for (row, seg) in chunk.iter().enumerate() {
            for i in 0..l {
                batch.data_mut()[row * l + i] =
                    T::from_f64(waveform.samples[seg.start_sample + i]);
            }
        }
        let z = model.encode_eval(&batch)?;
        for (row, seg) in chunk.iter().enumerate() {
            out.push(Embedding {
                vector: z.data()[row * d..(row + 1) * d]
                    .iter()
                    .map(|v| v.to_f64())
                    .collect(),
                center_time: seg.center_time,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::{generate_synthetic_corpus, regions_from_rttm, ConversationSpec};

    fn tiny_corpus(seed: u64) -> Vec<(Waveform, Vec<SpeechRegion>)> {
        let spec = ConversationSpec {
            turn_seconds: (3.2, 4.5),
            turns_per_conversation: (3, 4),
            ..ConversationSpec::default()
        };
        let (waves, rttm) = generate_synthetic_corpus(2, 1, &spec, seed);
        waves
            .into_iter()
            .map(|w| {
                let regions = regions_from_rttm(&rttm, &w.source_id);
                (w, regions)
            })
            .collect()
    }

    fn tiny_config() -> EncoderConfig {
        EncoderConfig {
            conv_channels: 8,
            linear_dims: vec![16, 16, 16],
            batch_size: 8,
            epochs: 2,
            warmup_epochs: 1,
            steps_per_epoch_cap: 2,
            ..EncoderConfig::default()
        }
    }

    #[test]
    fn smoke_train_produces_finite_positive_loss() {
        let corpus = tiny_corpus(100);
        let trained: TrainedEncoder<f32> =
            train(&tiny_config(), &corpus, &TrainOptions::default()).unwrap();
        assert_eq!(trained.log.len(), 4);
        for entry in &trained.log {
            assert!(entry.loss.is_finite());
            assert!(entry.loss > 0.0);
        }
    }

    #[test]
    fn same_seed_gives_identical_training() {
        let corpus = tiny_corpus(101);
        let opts = TrainOptions {
            seed: 9,
            ..TrainOptions::default()
        };
        let a: TrainedEncoder<f32> = train(&tiny_config(), &corpus, &opts).unwrap();
        let b: TrainedEncoder<f32> = train(&tiny_config(), &corpus, &opts).unwrap();
        for (x, y) in a.log.iter().zip(&b.log) {
            assert_eq!(x.loss, y.loss);
        }
        for (p, q) in a.model.params().iter().zip(b.model.params()) {
            assert_eq!(p.value.data(), q.value.data());
        }
    }

    #[test]
    fn embed_file_counts_match_segmentation() {
        let corpus = tiny_corpus(102);
        let trained: TrainedEncoder<f32> =
            train(&tiny_config(), &corpus, &TrainOptions::default()).unwrap();
        let (w, regions) = &corpus[0];
        let embeddings = embed_file(&trained.model, w, regions, 250.0).unwrap();
        let segments = extract_segments(w, regions, 500.0, 250.0);
        assert_eq!(embeddings.len(), segments.len());
        assert!(!embeddings.is_empty());
        // ordered by time
        for pair in embeddings.windows(2) {
            assert!(pair[0].center_time <= pair[1].center_time);
        }
        // no regions, no embeddings
        let none = embed_file(&trained.model, w, &[], 250.0).unwrap();
        assert!(none.is_empty());
    }
}
