//! Two-covariance PLDA: embedding preprocessing (center, whiten, length
//! normalization), EM training on pseudo-labeled embeddings, and pairwise
//! same/different-speaker log-likelihood-ratio scoring.

mod linalg;
mod model;
mod preprocess;

pub use linalg::{symmetric_eigen, Mat};
pub use model::{plda_llr, plda_train, PldaModel, PldaScorer, PldaTrainStats};
pub use preprocess::{fit_preprocessor, Preprocessor, WhitenSource};

use thiserror::Error;

/// Relative floor applied to eigenvalues before any inversion.
pub const EIGEN_FLOOR_REL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum PldaError {
    #[error("need at least 2 speakers, got {0}")]
    TooFewSpeakers(usize),
    #[error("every vector needs a label: {vectors} vectors vs {labels} labels")]
    LabelMismatch { vectors: usize, labels: usize },
    #[error("embedding dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("no vectors given")]
    Empty,
}
