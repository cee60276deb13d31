//! The raw-waveform speaker embedding model: a strided conv stack followed
//! by linear layers, trained self-supervised on pairs of segments drawn
//! from the same speech region, plus file embedding for inference.

mod config;
mod loss;
mod model;
mod pairs;
mod train;

pub use config::EncoderConfig;
pub use loss::{barlow_twins_loss, vicreg_loss, LossOutput, VicRegWeights};
pub use model::{Model, Tape};
pub use pairs::{PairBatch, PairSampler};
pub use train::{embed_file, train, Embedding, LossKind, TrainError, TrainLogEntry, TrainOptions, TrainedEncoder};
