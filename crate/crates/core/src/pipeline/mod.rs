//! Orchestration of the unsupervised recipe: pseudo-label generation,
//! PLDA similarity matrices, row-representation distances, synthetic
//! threshold tuning, end-to-end diarization, and the ablation harness.

mod ablate;
mod diarize;
mod pseudo;
mod similarity;
mod tuning;

pub use ablate::{ablation_run, AblationInputs, AblationReport, AblationRow, PLDA_COUNT, PLDA_ORACLE_VAD, PLDA_THRESHOLD, RAW_COUNT, VICREG_COUNT};
pub use diarize::{diarize, diarize_embeddings, Stopping};
pub use pseudo::{generate_pseudo_labels, pseudo_labels_from_embeddings, PseudoLabeledSet};
pub use similarity::{build_similarity, row_distance, SimilarityMatrix};
pub use tuning::{
    synthesize_tuning_utterances, tune_threshold, ThresholdResult, TuningParams, TuningUtterance,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Nn(#[from] crate::nncore::NnError),
    #[error(transparent)]
    Cluster(#[from] crate::cluster::ClusterError),
    #[error(transparent)]
    Plda(#[from] crate::plda::PldaError),
    #[error(transparent)]
    Score(#[from] crate::score::ScoreError),
    #[error("no file yielded enough segments for pseudo-labeling (need >= {need} per file)")]
    NoEligibleFiles { need: usize },
    #[error("threshold grid is empty")]
    EmptyGrid,
    #[error("{0}")]
    Invalid(String),
}
