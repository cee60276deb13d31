//! Two-covariance PLDA model and EM estimation.
//!
//! Generative model: a speaker's latent mean `y ~ N(mu, Phi_b)` and each of
//! their vectors `x = y + e` with `e ~ N(0, Phi_w)`. Every E/M step works in
//! the basis that simultaneously diagonalizes the two covariances (within
//! becomes identity, between becomes `diag(psi)`), which turns posteriors,
//! marginal likelihoods and pair scoring into per-dimension scalar
//! arithmetic. Per-speaker sufficient statistics are accumulated once, so
//! an iteration costs O(dim^3) regardless of the vector count.

use super::linalg::{symmetric_eigen, Mat};
use super::{PldaError, EIGEN_FLOOR_REL};
use crate::nncore::{Container, ContainerError, Tensor};

#[derive(Debug, Clone)]
pub struct PldaModel {
    pub mu: Vec<f64>,
    pub phi_b: Mat,
    pub phi_w: Mat,
}

#[derive(Debug, Clone, Default)]
pub struct PldaTrainStats {
    /// Marginal log-likelihood at the start of each EM iteration.
    pub log_likelihoods: Vec<f64>,
    /// Iterations where the within-covariance eigenvalue floor fired.
    pub floored_iterations: usize,
}

struct SpeakerStats {
    count: f64,
    sum: Vec<f64>,
    /// Raw second moment of this speaker's vectors.
    scatter: Mat,
}

struct Diagonalized {
    /// `transform * phi_w * transform^T = I`,
    /// `transform * phi_b * transform^T = diag(psi)`.
    transform: Mat,
    inverse: Mat,
    psi: Vec<f64>,
    /// `log |det transform|`, needed to express likelihoods in input coords.
    log_det: f64,
    floored: bool,
}

fn simultaneous_diagonalization(phi_w: &Mat, phi_b: &Mat) -> Diagonalized {
    let dim = phi_w.rows;
    let (mut d, u) = symmetric_eigen(phi_w);
    let floor = (d.first().copied().unwrap_or(0.0).max(0.0) * EIGEN_FLOOR_REL).max(1e-12);
    let mut floored = false;
    for v in &mut d {
        if *v < floor {
            *v = floor;
            floored = true;
        }
    }
    // W = diag(d^-1/2) U^T whitens phi_w
    let mut w = u.transpose();
    for (i, di) in d.iter().enumerate() {
        let s = 1.0 / di.sqrt();
        for j in 0..dim {
            w.data[i * dim + j] *= s;
        }
    }
    let b_whitened = w.matmul(phi_b).matmul(&w.transpose()).symmetrized();
    let (psi_raw, v) = symmetric_eigen(&b_whitened);
    let psi: Vec<f64> = psi_raw.iter().map(|p| p.max(0.0)).collect();
    let transform = v.transpose().matmul(&w);
    // inverse of (V^T diag(d^-1/2) U^T) = U diag(d^1/2) V
    let mut scaled_v = v.clone();
    for i in 0..dim {
        let s = d[i].sqrt();
        for j in 0..dim {
            scaled_v.data[i * dim + j] *= s;
        }
    }
    let inverse = u.matmul(&scaled_v);
    let log_det = -0.5 * d.iter().map(|x| x.ln()).sum::<f64>();
    Diagonalized {
        transform,
        inverse,
        psi,
        log_det,
        floored,
    }
}

/// EM estimation on labeled vectors. Returns the model and per-iteration
/// diagnostics; the log-likelihood sequence is non-decreasing.
pub fn plda_train(
    vectors: &[Vec<f64>],
    speaker_labels: &[usize],
    iters: usize,
) -> Result<(PldaModel, PldaTrainStats), PldaError> {
    if vectors.is_empty() {
        return Err(PldaError::Empty);
    }
    if vectors.len() != speaker_labels.len() {
        return Err(PldaError::LabelMismatch {
            vectors: vectors.len(),
            labels: speaker_labels.len(),
        });
    }
    let dim = vectors[0].len();
    for v in vectors {
        if v.len() != dim {
            return Err(PldaError::Dimension {
                expected: dim,
                got: v.len(),
            });
        }
    }

    // compact speaker ids in first-appearance order
    let mut remap = std::collections::BTreeMap::new();
    for &l in speaker_labels {
        let next = remap.len();
        remap.entry(l).or_insert(next);
    }
    let n_speakers = remap.len();
    if n_speakers < 2 {
        return Err(PldaError::TooFewSpeakers(n_speakers));
    }

    // per-speaker sufficient statistics
    let mut stats: Vec<SpeakerStats> = (0..n_speakers)
        .map(|_| SpeakerStats {
            count: 0.0,
            sum: vec![0.0; dim],
            scatter: Mat::zeros(dim, dim),
        })
        .collect();
    for (x, &l) in vectors.iter().zip(speaker_labels) {
        let s = &mut stats[remap[&l]];
        s.count += 1.0;
        for (acc, v) in s.sum.iter_mut().zip(x) {
            *acc += v;
        }
        for a in 0..dim {
            let xa = x[a];
            for b in 0..dim {
                s.scatter.data[a * dim + b] += xa * x[b];
            }
        }
    }
    let n_total: f64 = stats.iter().map(|s| s.count).sum();

    // initialization: global mean, within/between scatters
    let mut mu: Vec<f64> = (0..dim)
        .map(|d| stats.iter().map(|s| s.sum[d]).sum::<f64>() / n_total)
        .collect();
    let mut phi_w = Mat::zeros(dim, dim);
    let mut phi_b = Mat::zeros(dim, dim);
    for s in &stats {
        let m: Vec<f64> = s.sum.iter().map(|v| v / s.count).collect();
        // within: scatter - n * m m^T
        let mm = Mat::outer(&m, &m).scaled(s.count);
        for i in 0..dim * dim {
            phi_w.data[i] += s.scatter.data[i] - mm.data[i];
        }
        let centered: Vec<f64> = m.iter().zip(&mu).map(|(a, b)| a - b).collect();
        let bb = Mat::outer(&centered, &centered);
        for i in 0..dim * dim {
            phi_b.data[i] += bb.data[i];
        }
    }
    phi_w = phi_w.scaled(1.0 / n_total).symmetrized();
    phi_b = phi_b.scaled(1.0 / n_speakers as f64).symmetrized();

    let mut report = PldaTrainStats::default();
    for _ in 0..iters {
        let diag = simultaneous_diagonalization(&phi_w, &phi_b);
        if diag.floored {
            report.floored_iterations += 1;
        }
        let t = &diag.transform;
        let psi = &diag.psi;
        let m_quad = t.transpose().matmul(t); // for per-speaker trace terms

        let mut ll = n_total * diag.log_det;
        let mut y_hat: Vec<Vec<f64>> = Vec::with_capacity(n_speakers);
        let mut c_post: Vec<Vec<f64>> = Vec::with_capacity(n_speakers);
        let mut y_bar_all: Vec<Vec<f64>> = Vec::with_capacity(n_speakers);

        for s in &stats {
            let n = s.count;
            let mean_s: Vec<f64> = s.sum.iter().map(|v| v / n).collect();
            let centered: Vec<f64> = mean_s.iter().zip(&mu).map(|(a, b)| a - b).collect();
            let y_bar = t.matvec(&centered);

            // centered raw scatter: S - f mu^T - mu f^T + n mu mu^T
            let mut s_c = s.scatter.clone();
            for a in 0..dim {
                for b in 0..dim {
                    s_c.data[a * dim + b] +=
                        -s.sum[a] * mu[b] - mu[a] * s.sum[b] + n * mu[a] * mu[b];
                }
            }
            let trace = m_quad.dot(&s_c);

            let mut quad_correction = 0.0;
            let mut log_dets = 0.0;
            let mut hat = vec![0.0; dim];
            let mut post = vec![0.0; dim];
            for di in 0..dim {
                let p = psi[di];
                let denom = 1.0 + n * p;
                log_dets += denom.ln();
                // psi/(1 + n psi) * (sum of centered obs)^2, per dimension
                quad_correction += p / denom * (n * y_bar[di]) * (n * y_bar[di]);
                // posterior of the speaker mean, per dimension
                hat[di] = n * p * y_bar[di] / denom;
                post[di] = p / denom;
            }
            ll += -0.5
                * (n * dim as f64 * (2.0 * std::f64::consts::PI).ln()
                    + log_dets
                    + trace
                    - quad_correction);
            y_hat.push(hat);
            c_post.push(post);
            y_bar_all.push(y_bar);
        }
        report.log_likelihoods.push(ll);

        // M-step in the diagonal basis
        let mut mu_y = vec![0.0; dim];
        for hat in &y_hat {
            for (m, v) in mu_y.iter_mut().zip(hat) {
                *m += v / n_speakers as f64;
            }
        }
        let mut phi_b_y = Mat::zeros(dim, dim);
        for (hat, post) in y_hat.iter().zip(&c_post) {
            let centered: Vec<f64> = hat.iter().zip(&mu_y).map(|(a, b)| a - b).collect();
            let outer = Mat::outer(&centered, &centered);
            for i in 0..dim * dim {
                phi_b_y.data[i] += outer.data[i];
            }
            for di in 0..dim {
                phi_b_y.data[di * dim + di] += post[di];
            }
        }
        phi_b_y = phi_b_y.scaled(1.0 / n_speakers as f64);

        // global transformed scatter about mu
        let mut sxx_c = Mat::zeros(dim, dim);
        let mut sx = vec![0.0; dim];
        for s in &stats {
            for i in 0..dim * dim {
                sxx_c.data[i] += s.scatter.data[i];
            }
            for (acc, v) in sx.iter_mut().zip(&s.sum) {
                *acc += v;
            }
        }
        for a in 0..dim {
            for b in 0..dim {
                sxx_c.data[a * dim + b] +=
                    -sx[a] * mu[b] - mu[a] * sx[b] + n_total * mu[a] * mu[b];
            }
        }
        let mut phi_w_y = t.matmul(&sxx_c).matmul(&t.transpose());
        for ((s, hat), (post, y_bar)) in stats
            .iter()
            .zip(&y_hat)
            .zip(c_post.iter().zip(&y_bar_all))
        {
            let n = s.count;
            for a in 0..dim {
                for b in 0..dim {
                    phi_w_y.data[a * dim + b] +=
                        n * (hat[a] * hat[b] - y_bar[a] * hat[b] - hat[a] * y_bar[b]);
                }
                phi_w_y.data[a * dim + a] += n * post[a];
            }
        }
        phi_w_y = phi_w_y.scaled(1.0 / n_total);

        // back to input coordinates
        let inv = &diag.inverse;
        let shift = inv.matvec(&mu_y);
        for (m, s) in mu.iter_mut().zip(&shift) {
            *m += s;
        }
        phi_b = inv.matmul(&phi_b_y).matmul(&inv.transpose()).symmetrized();
        phi_w = inv.matmul(&phi_w_y).matmul(&inv.transpose()).symmetrized();
    }

    Ok((PldaModel { mu, phi_b, phi_w }, report))
}

/// Precomputed scoring transform: projecting a vector once makes every
/// pairwise score O(dim).
#[derive(Debug, Clone)]
pub struct PldaScorer {
    mu: Vec<f64>,
    transform: Mat,
    psi: Vec<f64>,
    /// Per-dimension constant of the log-likelihood ratio.
    constants: Vec<f64>,
}

impl PldaModel {
    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn scorer(&self) -> PldaScorer {
        let diag = simultaneous_diagonalization(&self.phi_w, &self.phi_b);
        let constants = diag
            .psi
            .iter()
            .map(|&p| -0.5 * ((1.0 + 2.0 * p).ln() - 2.0 * (1.0 + p).ln()))
            .collect();
        PldaScorer {
            mu: self.mu.clone(),
            transform: diag.transform,
            psi: diag.psi,
            constants,
        }
    }
}

impl PldaScorer {
    /// Maps an embedding into the diagonalized scoring space.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.mu.len(), "dimension mismatch");
        let centered: Vec<f64> = x.iter().zip(&self.mu).map(|(a, b)| a - b).collect();
        self.transform.matvec(&centered)
    }

    /// Log-likelihood ratio of same vs different speaker for two projected
    /// vectors.
    pub fn llr_projected(&self, u: &[f64], v: &[f64]) -> f64 {
        let mut score = 0.0;
        for ((&p, k), (&ud, &vd)) in self
            .psi
            .iter()
            .zip(&self.constants)
            .zip(u.iter().zip(v.iter()))
        {
            let same_quad =
                ((1.0 + p) * (ud * ud + vd * vd) - 2.0 * p * ud * vd) / (1.0 + 2.0 * p);
            let diff_quad = (ud * ud + vd * vd) / (1.0 + p);
            score += k - 0.5 * (same_quad - diff_quad);
        }
        score
    }

    pub fn llr(&self, a: &[f64], b: &[f64]) -> f64 {
        self.llr_projected(&self.project(a), &self.project(b))
    }
}

/// Convenience wrapper: builds the scorer and scores one pair.
pub fn plda_llr(model: &PldaModel, z_i: &[f64], z_j: &[f64]) -> f64 {
    model.scorer().llr(z_i, z_j)
}

impl PldaModel {
    pub fn write_into(&self, c: &mut Container) {
        let d = self.dim();
        c.add_tensor("plda.mu", &Tensor::<f64>::from_vec(&[d], self.mu.clone()));
        c.add_tensor(
            "plda.phi_b",
            &Tensor::<f64>::from_vec(&[d, d], self.phi_b.data.clone()),
        );
        c.add_tensor(
            "plda.phi_w",
            &Tensor::<f64>::from_vec(&[d, d], self.phi_w.data.clone()),
        );
    }

    pub fn read_from(c: &Container) -> Result<Self, ContainerError> {
        let mu: Tensor<f64> = c.tensor("plda.mu")?;
        let d = mu.len();
        let phi_b: Tensor<f64> = c.tensor("plda.phi_b")?;
        let phi_w: Tensor<f64> = c.tensor("plda.phi_w")?;
        Ok(PldaModel {
            mu: mu.into_data(),
            phi_b: Mat {
                rows: d,
                cols: d,
                data: phi_b.into_data(),
            },
            phi_w: Mat {
                rows: d,
                cols: d,
                data: phi_w.into_data(),
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn normal(rng: &mut ChaCha8Rng) -> f64 {
        // Box-Muller
        let u1: f64 = rng.gen_range(1e-12..1.0);
        let u2: f64 = rng.gen_range(0.0..1.0);
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    fn sample_two_cov(
        rng: &mut ChaCha8Rng,
        n_speakers: usize,
        per_speaker: usize,
        phi_b_diag: &[f64],
        phi_w_scale: f64,
    ) -> (Vec<Vec<f64>>, Vec<usize>) {
        let dim = phi_b_diag.len();
        let mut vectors = Vec::new();
        let mut labels = Vec::new();
        for s in 0..n_speakers {
            let y: Vec<f64> = phi_b_diag
                .iter()
                .map(|&v| normal(rng) * v.sqrt())
                .collect();
            for _ in 0..per_speaker {
                let x: Vec<f64> = (0..dim)
                    .map(|d| y[d] + normal(rng) * phi_w_scale.sqrt())
                    .collect();
                vectors.push(x);
                labels.push(s);
            }
        }
        (vectors, labels)
    }

    #[test]
    fn log_likelihood_is_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let (vectors, labels) = sample_two_cov(&mut rng, 30, 6, &[1.5, 0.8, 0.3], 1.0);
        let (_, stats) = plda_train(&vectors, &labels, 10).unwrap();
        assert_eq!(stats.log_likelihoods.len(), 10);
        for w in stats.log_likelihoods.windows(2) {
            assert!(
                w[1] >= w[0] - 1e-8,
                "log-likelihood decreased: {} -> {}",
                w[0],
                w[1]
            );
        }
    }

    #[test]
    fn llr_is_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let (vectors, labels) = sample_two_cov(&mut rng, 20, 5, &[1.0, 0.5], 1.0);
        let (model, _) = plda_train(&vectors, &labels, 5).unwrap();
        let scorer = model.scorer();
        for _ in 0..50 {
            let a: Vec<f64> = (0..2).map(|_| normal(&mut rng)).collect();
            let b: Vec<f64> = (0..2).map(|_| normal(&mut rng)).collect();
            let ab = scorer.llr(&a, &b);
            let ba = scorer.llr(&b, &a);
            assert!((ab - ba).abs() < 1e-12, "{ab} vs {ba}");
        }
    }

    #[test]
    fn one_dimensional_spec_value() {
        // phi_b = 1, phi_w = 1, mu = 0, z_i = z_j = 0:
        // llr = -1/2 log(3/4) ~ +0.1438
        let model = PldaModel {
            mu: vec![0.0],
            phi_b: Mat::from_rows(vec![vec![1.0]]),
            phi_w: Mat::from_rows(vec![vec![1.0]]),
        };
        let llr = plda_llr(&model, &[0.0], &[0.0]);
        let expect = -0.5 * (3.0f64 / 4.0).ln();
        assert!((llr - expect).abs() < 1e-12, "{llr} vs {expect}");
        assert!((llr - 0.1438).abs() < 1e-4);
    }

    #[test]
    fn zero_between_covariance_means_zero_llr() {
        // Phi_b = 0: same/different hypotheses coincide
        let model = PldaModel {
            mu: vec![0.1, -0.2],
            phi_b: Mat::zeros(2, 2),
            phi_w: Mat::from_rows(vec![vec![1.0, 0.2], vec![0.2, 0.8]]),
        };
        let scorer = model.scorer();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..20 {
            let a: Vec<f64> = (0..2).map(|_| normal(&mut rng)).collect();
            let b: Vec<f64> = (0..2).map(|_| normal(&mut rng)).collect();
            assert!(scorer.llr(&a, &b).abs() < 1e-9);
        }
    }

    #[test]
    fn identical_vectors_per_speaker_floor_phi_w() {
        // all of a speaker's vectors identical: within-covariance collapses
        let vectors = vec![
            vec![1.0, 0.0],
            vec![1.0, 0.0],
            vec![-1.0, 0.5],
            vec![-1.0, 0.5],
            vec![0.0, -1.0],
            vec![0.0, -1.0],
        ];
        let labels = vec![0, 0, 1, 1, 2, 2];
        let (model, stats) = plda_train(&vectors, &labels, 5).unwrap();
        assert!(stats.floored_iterations > 0, "floor should fire");
        let trace_b = model.phi_b.at(0, 0) + model.phi_b.at(1, 1);
        assert!(trace_b > 0.1, "between-speaker scatter survives: {trace_b}");
    }

    #[test]
    fn rejects_single_speaker() {
        let vectors = vec![vec![1.0], vec![2.0]];
        let labels = vec![0, 0];
        assert!(matches!(
            plda_train(&vectors, &labels, 3),
            Err(PldaError::TooFewSpeakers(1))
        ));
    }

    #[test]
    fn container_round_trip() {
        let model = PldaModel {
            mu: vec![0.5, -1.0],
            phi_b: Mat::from_rows(vec![vec![2.0, 0.1], vec![0.1, 1.0]]),
            phi_w: Mat::from_rows(vec![vec![1.0, 0.0], vec![0.0, 0.5]]),
        };
        let mut c = Container::new();
        model.write_into(&mut c);
        let back = PldaModel::read_from(&c).unwrap();
        assert_eq!(back.mu, model.mu);
        assert_eq!(back.phi_b, model.phi_b);
        assert_eq!(back.phi_w, model.phi_w);
    }
}
