//! PLDA similarity matrices and their row-representation distances.

use super::PipelineError;
use crate::cluster::DistanceMatrix;
use crate::plda::{PldaScorer, Preprocessor};

/// Pairwise log-likelihood-ratio scores of one utterance's segments.
#[derive(Debug, Clone)]
pub struct SimilarityMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl SimilarityMatrix {
    /// Wraps precomputed scores; panics unless symmetric and finite.
    pub fn from_raw(n: usize, entries: Vec<f64>) -> Self {
        assert_eq!(entries.len(), n * n);
        for i in 0..n {
            for j in 0..n {
                assert!(entries[i * n + j].is_finite(), "score [{i},{j}] not finite");
                assert_eq!(
                    entries[i * n + j],
                    entries[j * n + i],
                    "scores must be symmetric"
                );
            }
        }
        SimilarityMatrix { n, entries }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }
}

/// Scores every segment pair of one utterance, diagonal included. Vectors
/// run through the preprocessor and the scorer projection exactly once.
pub fn build_similarity(
    embeddings: &[Vec<f64>],
    scorer: &PldaScorer,
    preprocessor: &Preprocessor,
) -> Result<SimilarityMatrix, PipelineError> {
    let n = embeddings.len();
    let projected: Vec<Vec<f64>> = embeddings
        .iter()
        .map(|e| scorer.project(&preprocessor.apply(e)))
        .collect();
    let mut entries = vec![0.0f64; n * n];
    for i in 0..n {
        for j in i..n {
            let s = scorer.llr_projected(&projected[i], &projected[j]);
            if !s.is_finite() {
                return Err(PipelineError::Invalid(format!(
                    "non-finite similarity at ({i}, {j})"
                )));
            }
            entries[i * n + j] = s;
            entries[j * n + i] = s;
        }
    }
    Ok(SimilarityMatrix { n, entries })
}

/// Squared Euclidean distance between score-matrix rows: the row of scores
/// against every segment is the segment's representation.
pub fn row_distance(s: &SimilarityMatrix) -> DistanceMatrix {
    let n = s.len();
    DistanceMatrix::from_fn(n, |i, j| {
        s.row(i)
            .iter()
            .zip(s.row(j))
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    })
    .expect("row distances are symmetric, finite and non-negative")
}
