//! Self-supervised objectives over two batches of embeddings.
//!
//! Both losses see two views `[b, d]` assumed to come from the same
//! speakers row by row. Gradients are returned analytically; the
//! finite-difference suite checks them.

use crate::nncore::{NnError, Scalar, Tensor};

/// Loss value plus input gradients.
#[derive(Debug, Clone)]
pub struct LossOutput<T: Scalar> {
    pub loss: f64,
    pub grad_t: Tensor<T>,
    pub grad_tau: Tensor<T>,
    /// Dimensions whose batch variance collapsed below 1e-10 in either view;
    /// the eps keeps them finite, the trainer logs them.
    pub degenerate_dims: usize,
}

const STANDARDIZE_EPS: f64 = 1e-12;

struct Standardized {
    /// `[b, d]` standardized values.
    values: Vec<f64>,
    inv_std: Vec<f64>,
    degenerate: usize,
}

fn standardize(z: &[f64], b: usize, d: usize) -> Standardized {
    let mut mean = vec![0.0f64; d];
    for row in z.chunks_exact(d) {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= b as f64;
    }
    let mut var = vec![0.0f64; d];
    for row in z.chunks_exact(d) {
        for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
            let c = v - m;
            *s += c * c;
        }
    }
    let mut degenerate = 0;
    let inv_std: Vec<f64> = var
        .iter()
        .map(|s| {
            let v = s / b as f64;
            if v < 1e-10 {
                degenerate += 1;
            }
            1.0 / (v + STANDARDIZE_EPS).sqrt()
        })
        .collect();
    let mut values = vec![0.0f64; b * d];
    for (bi, row) in z.chunks_exact(d).enumerate() {
        for di in 0..d {
            values[bi * d + di] = (row[di] - mean[di]) * inv_std[di];
        }
    }
    Standardized {
        values,
        inv_std,
        degenerate,
    }
}

/// Backward through per-dimension standardization:
/// `dz = inv_std * (da - mean_b(da) - a * mean_b(da * a))`.
fn standardize_backward(st: &Standardized, da: &[f64], b: usize, d: usize) -> Vec<f64> {
    let mut mean_da = vec![0.0f64; d];
    let mut mean_da_a = vec![0.0f64; d];
    for bi in 0..b {
        for di in 0..d {
            let g = da[bi * d + di];
            mean_da[di] += g;
            mean_da_a[di] += g * st.values[bi * d + di];
        }
    }
    for v in &mut mean_da {
        *v /= b as f64;
    }
    for v in &mut mean_da_a {
        *v /= b as f64;
    }
    let mut dz = vec![0.0f64; b * d];
    for bi in 0..b {
        for di in 0..d {
            let a = st.values[bi * d + di];
            dz[bi * d + di] =
                st.inv_std[di] * (da[bi * d + di] - mean_da[di] - a * mean_da_a[di]);
        }
    }
    dz
}

fn check_views<T: Scalar>(
    op: &'static str,
    z_t: &Tensor<T>,
    z_tau: &Tensor<T>,
) -> Result<(usize, usize), NnError> {
    let (b, d) = match *z_t.shape() {
        [b, d] => (b, d),
        _ => {
            return Err(NnError::Dimension {
                op,
                detail: format!("expected [b, d], got {:?}", z_t.shape()),
            })
        }
    };
    if z_tau.shape() != [b, d] {
        return Err(NnError::Dimension {
            op,
            detail: format!("views disagree: {:?} vs {:?}", z_t.shape(), z_tau.shape()),
        });
    }
    if b < 2 {
        return Err(NnError::BatchTooSmall { op, got: b, need: 2 });
    }
    Ok((b, d))
}

/// Cross-correlation objective: both views are standardized per dimension
/// over the batch, `R = Z_t^T Z_tau / b`, and the loss drives `R` toward the
/// identity: `sum_i (R_ii - 1)^2 + lambda * sum_{i != j} R_ij^2`.
pub fn barlow_twins_loss<T: Scalar>(
    z_t: &Tensor<T>,
    z_tau: &Tensor<T>,
    lambda: f64,
) -> Result<LossOutput<T>, NnError> {
    let (b, d) = check_views("barlow_twins_loss", z_t, z_tau)?;
    let zt: Vec<f64> = z_t.data().iter().map(|v| v.to_f64()).collect();
    let ztau: Vec<f64> = z_tau.data().iter().map(|v| v.to_f64()).collect();
    let a = standardize(&zt, b, d);
    let c = standardize(&ztau, b, d);

    // R[d, d] = A^T C / b
    let mut r = vec![0.0f64; d * d];
    for bi in 0..b {
        let arow = &a.values[bi * d..(bi + 1) * d];
        let crow = &c.values[bi * d..(bi + 1) * d];
        for i in 0..d {
            let ai = arow[i];
            for j in 0..d {
                r[i * d + j] += ai * crow[j];
            }
        }
    }
    for v in &mut r {
        *v /= b as f64;
    }

    let mut loss = 0.0f64;
    let mut g = vec![0.0f64; d * d]; // dL/dR
    for i in 0..d {
        for j in 0..d {
            let rij = r[i * d + j];
            if i == j {
                loss += (rij - 1.0) * (rij - 1.0);
                g[i * d + j] = 2.0 * (rij - 1.0);
            } else {
                loss += lambda * rij * rij;
                g[i * d + j] = 2.0 * lambda * rij;
            }
        }
    }

    // dL/dA = C G^T / b ; dL/dC = A G / b
    let mut da = vec![0.0f64; b * d];
    let mut dc = vec![0.0f64; b * d];
    for bi in 0..b {
        for i in 0..d {
            let mut sa = 0.0;
            let mut sc = 0.0;
            for j in 0..d {
                sa += c.values[bi * d + j] * g[i * d + j];
                sc += a.values[bi * d + j] * g[j * d + i];
            }
            da[bi * d + i] = sa / b as f64;
            dc[bi * d + i] = sc / b as f64;
        }
    }
    let dzt = standardize_backward(&a, &da, b, d);
    let dztau = standardize_backward(&c, &dc, b, d);

    Ok(LossOutput {
        loss,
        grad_t: Tensor::from_vec(&[b, d], dzt.into_iter().map(T::from_f64).collect()),
        grad_tau: Tensor::from_vec(&[b, d], dztau.into_iter().map(T::from_f64).collect()),
        degenerate_dims: a.degenerate + c.degenerate,
    })
}

/// Weights for the three VicReg terms (invariance, variance, covariance).
#[derive(Debug, Clone, Copy)]
pub struct VicRegWeights {
    pub invariance: f64,
    pub variance: f64,
    pub covariance: f64,
}

impl Default for VicRegWeights {
    fn default() -> Self {
        VicRegWeights {
            invariance: 25.0,
            variance: 25.0,
            covariance: 1.0,
        }
    }
}

/// Variance-invariance-covariance objective: mean squared error between the
/// views, a hinge `max(0, 1 - std)` per dimension, and a squared
/// off-diagonal covariance penalty per view.
pub fn vicreg_loss<T: Scalar>(
    z_t: &Tensor<T>,
    z_tau: &Tensor<T>,
    weights: VicRegWeights,
) -> Result<LossOutput<T>, NnError> {
    let (b, d) = check_views("vicreg_loss", z_t, z_tau)?;
    let zt: Vec<f64> = z_t.data().iter().map(|v| v.to_f64()).collect();
    let ztau: Vec<f64> = z_tau.data().iter().map(|v| v.to_f64()).collect();

    let mut grad_t = vec![0.0f64; b * d];
    let mut grad_tau = vec![0.0f64; b * d];

    // invariance: mean over batch and dims of squared difference
    let mut inv = 0.0f64;
    let norm = (b * d) as f64;
    for i in 0..b * d {
        let diff = zt[i] - ztau[i];
        inv += diff * diff / norm;
        grad_t[i] += weights.invariance * 2.0 * diff / norm;
        grad_tau[i] -= weights.invariance * 2.0 * diff / norm;
    }

    let mut degenerate = 0usize;
    let mut var_term = 0.0f64;
    let mut cov_term = 0.0f64;
    for (z, grad) in [(&zt, &mut grad_t), (&ztau, &mut grad_tau)] {
        let (v, c, dz, deg) = vicreg_view_terms(z, b, d, &weights);
        var_term += v;
        cov_term += c;
        degenerate += deg;
        for (g, add) in grad.iter_mut().zip(dz) {
            *g += add;
        }
    }

    let loss =
        weights.invariance * inv + weights.variance * var_term + weights.covariance * cov_term;
    Ok(LossOutput {
        loss,
        grad_t: Tensor::from_vec(&[b, d], grad_t.into_iter().map(T::from_f64).collect()),
        grad_tau: Tensor::from_vec(&[b, d], grad_tau.into_iter().map(T::from_f64).collect()),
        degenerate_dims: degenerate,
    })
}

/// Variance and covariance terms for one view plus their weighted gradient.
fn vicreg_view_terms(
    z: &[f64],
    b: usize,
    d: usize,
    weights: &VicRegWeights,
) -> (f64, f64, Vec<f64>, usize) {
    let nb = b as f64;
    let mut mean = vec![0.0f64; d];
    for row in z.chunks_exact(d) {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v / nb;
        }
    }
    // centered copy
    let mut centered = vec![0.0f64; b * d];
    for bi in 0..b {
        for di in 0..d {
            centered[bi * d + di] = z[bi * d + di] - mean[di];
        }
    }
    // unbiased per-dimension variance
    let denom = (b - 1) as f64;
    let mut var = vec![0.0f64; d];
    for row in centered.chunks_exact(d) {
        for (s, v) in var.iter_mut().zip(row) {
            *s += v * v / denom;
        }
    }
    let mut degenerate = 0usize;
    let std: Vec<f64> = var
        .iter()
        .map(|&v| {
            if v < 1e-10 {
                degenerate += 1;
            }
            (v + STANDARDIZE_EPS).sqrt()
        })
        .collect();
    let var_term: f64 = std.iter().map(|s| (1.0 - s).max(0.0)).sum::<f64>() / d as f64;

    // covariance matrix C = centered^T centered / (b-1); penalty on off-diagonal
    let mut cov = vec![0.0f64; d * d];
    for row in centered.chunks_exact(d) {
        for i in 0..d {
            for j in 0..d {
                cov[i * d + j] += row[i] * row[j] / denom;
            }
        }
    }
    let mut cov_term = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            if i != j {
                cov_term += cov[i * d + j] * cov[i * d + j];
            }
        }
    }
    cov_term /= d as f64;

    // gradient wrt centered values
    let mut dcentered = vec![0.0f64; b * d];
    for bi in 0..b {
        for di in 0..d {
            let cv = centered[bi * d + di];
            // variance hinge
            if 1.0 - std[di] > 0.0 {
                dcentered[bi * d + di] -=
                    weights.variance * cv / (d as f64 * denom * std[di]);
            }
            // covariance: dL/dcentered = 4/(d*(b-1)) * centered * C_offdiag
            let mut s = 0.0f64;
            for j in 0..d {
                if j != di {
                    s += centered[bi * d + j] * cov[j * d + di];
                }
            }
            dcentered[bi * d + di] += weights.covariance * 4.0 * s / (d as f64 * denom);
        }
    }
    // through the centering: dz = dcentered - mean_b(dcentered)
    let mut mean_dc = vec![0.0f64; d];
    for row in dcentered.chunks_exact(d) {
        for (m, v) in mean_dc.iter_mut().zip(row) {
            *m += v / nb;
        }
    }
    let mut dz = vec![0.0f64; b * d];
    for bi in 0..b {
        for di in 0..d {
            dz[bi * d + di] = dcentered[bi * d + di] - mean_dc[di];
        }
    }
    (var_term, cov_term, dz, degenerate)
}
