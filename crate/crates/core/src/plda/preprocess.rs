//! Embedding preprocessing ahead of PLDA: center by the global mean,
//! whiten by the inverse square root of a covariance (total by default,
//! within-class optionally), optionally project onto discriminant
//! directions, then scale to norm sqrt(dim).

use super::linalg::{symmetric_eigen, Mat};
use super::{PldaError, EIGEN_FLOOR_REL};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WhitenSource {
    TotalCovariance,
    WithinClass,
}

#[derive(Debug, Clone)]
pub struct Preprocessor {
    pub mean: Vec<f64>,
    /// Whitening transform applied to centered vectors (rows act on input).
    pub whitening: Mat,
    /// Optional discriminant projection applied after whitening.
    pub projection: Option<Mat>,
    pub length_normalize: bool,
}

impl Preprocessor {
    /// Output dimensionality after whitening and optional projection.
    pub fn output_dim(&self) -> usize {
        self.projection
            .as_ref()
            .map_or(self.whitening.rows, |p| p.rows)
    }

    pub fn apply(&self, embedding: &[f64]) -> Vec<f64> {
        assert_eq!(embedding.len(), self.mean.len(), "dimension mismatch");
        let centered: Vec<f64> = embedding
            .iter()
            .zip(&self.mean)
            .map(|(x, m)| x - m)
            .collect();
        let mut y = self.whitening.matvec(&centered);
        if let Some(p) = &self.projection {
            y = p.matvec(&y);
        }
        if self.length_normalize {
            let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                let target = (y.len() as f64).sqrt();
                let s = target / norm;
                for v in &mut y {
                    *v *= s;
                }
            }
        }
        y
    }
}

/// Fits the preprocessing chain on training embeddings. `labels` drive the
/// within-class covariance option and the optional projection; pass the
/// pseudo-speaker labels.
pub fn fit_preprocessor(
    embeddings: &[Vec<f64>],
    labels: &[usize],
    source: WhitenSource,
    length_normalize: bool,
    lda_dim: Option<usize>,
) -> Result<Preprocessor, PldaError> {
    if embeddings.is_empty() {
        return Err(PldaError::Empty);
    }
    if embeddings.len() != labels.len() {
        return Err(PldaError::LabelMismatch {
            vectors: embeddings.len(),
            labels: labels.len(),
        });
    }
    let dim = embeddings[0].len();
    for e in embeddings {
        if e.len() != dim {
            return Err(PldaError::Dimension {
                expected: dim,
                got: e.len(),
            });
        }
    }
    let n = embeddings.len() as f64;
    let mut mean = vec![0.0f64; dim];
    for e in embeddings {
        for (m, v) in mean.iter_mut().zip(e) {
            *m += v / n;
        }
    }

    let cov = match source {
        WhitenSource::TotalCovariance => scatter_about(embeddings, |_| &mean).scaled(1.0 / n),
        WhitenSource::WithinClass => {
            let speaker_means = per_speaker_means(embeddings, labels);
            scatter_about(embeddings, |i| &speaker_means[labels[i]]).scaled(1.0 / n)
        }
    };

    let whitening = inverse_sqrt(&cov);

    let projection = match lda_dim {
        None => None,
        Some(d_out) => {
            // between-class scatter of whitened speaker means; top
            // eigenvectors span the discriminant subspace
            let speaker_means = per_speaker_means(embeddings, labels);
            let n_speakers = speaker_means.len();
            let whitened_means: Vec<Vec<f64>> = speaker_means
                .iter()
                .map(|m| {
                    let centered: Vec<f64> =
                        m.iter().zip(&mean).map(|(x, mu)| x - mu).collect();
                    whitening.matvec(&centered)
                })
                .collect();
            let mut between = Mat::zeros(dim, dim);
            for wm in &whitened_means {
                between = between.add(&Mat::outer(wm, wm));
            }
            between = between.scaled(1.0 / n_speakers as f64);
            let (_, vectors) = symmetric_eigen(&between);
            // rank of the between scatter caps the projection
            let d_out = d_out.min(n_speakers.saturating_sub(1)).max(1).min(dim);
            let mut proj = Mat::zeros(d_out, dim);
            for r in 0..d_out {
                for c in 0..dim {
                    proj.set(r, c, vectors.at(c, r));
                }
            }
            Some(proj)
        }
    };

    Ok(Preprocessor {
        mean,
        whitening,
        projection,
        length_normalize,
    })
}

fn per_speaker_means(embeddings: &[Vec<f64>], labels: &[usize]) -> Vec<Vec<f64>> {
    let n_speakers = labels.iter().copied().max().map_or(0, |m| m + 1);
    let dim = embeddings[0].len();
    let mut sums = vec![vec![0.0f64; dim]; n_speakers];
    let mut counts = vec![0usize; n_speakers];
    for (e, &l) in embeddings.iter().zip(labels) {
        counts[l] += 1;
        for (s, v) in sums[l].iter_mut().zip(e) {
            *s += v;
        }
    }
    for (sum, &c) in sums.iter_mut().zip(&counts) {
        if c > 0 {
            for v in sum.iter_mut() {
                *v /= c as f64;
            }
        }
    }
    sums
}

fn scatter_about<'a>(
    embeddings: &[Vec<f64>],
    center_of: impl Fn(usize) -> &'a [f64],
) -> Mat {
    let dim = embeddings[0].len();
    let mut s = Mat::zeros(dim, dim);
    for (i, e) in embeddings.iter().enumerate() {
        let c = center_of(i);
        let diff: Vec<f64> = e.iter().zip(c).map(|(x, m)| x - m).collect();
        for a in 0..dim {
            let da = diff[a];
            if da == 0.0 {
                continue;
            }
            for b in 0..dim {
                s.data[a * dim + b] += da * diff[b];
            }
        }
    }
    s
}

/// Symmetric inverse square root with relative eigenvalue flooring.
fn inverse_sqrt(cov: &Mat) -> Mat {
    let (w, v) = symmetric_eigen(cov);
    let floor = EIGEN_FLOOR_REL * w.first().copied().unwrap_or(1.0).max(0.0).max(1e-300);
    let n = cov.rows;
    let mut d = Mat::zeros(n, n);
    for i in 0..n {
        d.set(i, i, 1.0 / w[i].max(floor).sqrt());
    }
    v.matmul(&d).matmul(&v.transpose())
}
