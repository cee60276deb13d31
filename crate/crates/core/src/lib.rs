//! Unsupervised speaker diarization toolkit.
//!
//! The pipeline trains a raw-waveform speaker encoder with a self-supervised
//! cross-correlation objective, self-generates pseudo-speaker labels by
//! hierarchical clustering, trains a PLDA similarity model and a clustering
//! stopping threshold on those pseudo-labels, and diarizes audio end to end
//! with NIST-style DER evaluation. No annotated data is used anywhere except
//! for final scoring.
//!
//! Module map:
//! - [`audio`] — WAV ingestion, resampling, voice activity detection,
//!   segmentation, synthetic corpus generation
//! - [`nncore`] — dense tensors, the fixed differentiable operator set,
//!   the LARS optimizer and LR schedule, artifact containers
//! - [`encoder`] — the raw-waveform speaker embedding model and its
//!   self-supervised training loop
//! - [`cluster`] — agglomerative hierarchical clustering and dendrogram cuts
//! - [`plda`] — two-covariance PLDA training and log-likelihood-ratio scoring
//! - [`pipeline`] — pseudo-labeling, similarity matrices, threshold tuning,
//!   end-to-end diarization, ablations
//! - [`score`] — RTTM parsing/writing and DER computation

pub mod audio;
pub mod cluster;
pub mod encoder;
pub mod nncore;
pub mod pipeline;
pub mod plda;
pub mod score;
