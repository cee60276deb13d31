//! The fixed differentiable operator set: conv1d, linear, batchnorm1d,
//! ReLU and mean pooling over time. Every forward has a matching backward;
//! callers keep the intermediates each backward needs.
//!
//! Heavy operations parallelize over the batch dimension in fixed chunks
//! (see [`super::parallel`]), so results do not depend on the job count.

use super::parallel::{chunk_ranges, parallel_map};
use super::{NnError, Scalar, Tensor};
use std::ops::Range;

/// `floor((l + 2*pad - k) / stride) + 1`, or `None` when the kernel does not
/// fit even once.
pub fn conv1d_output_len(l: usize, k: usize, stride: usize, pad: usize) -> Option<usize> {
    let padded = l + 2 * pad;
    if padded < k {
        None
    } else {
        Some((padded - k) / stride + 1)
    }
}

fn carve_mut<'a, T>(
    mut data: &'a mut [T],
    ranges: &[Range<usize>],
    per: usize,
) -> Vec<(Range<usize>, &'a mut [T])> {
    let mut out = Vec::with_capacity(ranges.len());
    for r in ranges {
        let (head, tail) = data.split_at_mut(r.len() * per);
        out.push((r.clone(), head));
        data = tail;
    }
    out
}

fn im2col<T: Scalar>(
    x: &[T], // one sample, [c_in, l]
    c_in: usize,
    l: usize,
    k: usize,
    stride: usize,
    pad: usize,
    l_out: usize,
    col: &mut [T], // [c_in * k, l_out]
) {
    for ci in 0..c_in {
        let xrow = &x[ci * l..(ci + 1) * l];
        for kk in 0..k {
            let crow = &mut col[(ci * k + kk) * l_out..(ci * k + kk + 1) * l_out];
            for (lo, slot) in crow.iter_mut().enumerate() {
                let src = (lo * stride + kk) as isize - pad as isize;
                *slot = if src >= 0 && (src as usize) < l {
                    xrow[src as usize]
                } else {
                    T::ZERO
                };
            }
        }
    }
}

/// As [`im2col`] but writing the transpose `[l_out, c_in * k]`, so the
/// weight-gradient product can run on the faster NN kernel.
#[allow(clippy::too_many_arguments)]
fn im2col_t<T: Scalar>(
    x: &[T],
    c_in: usize,
    l: usize,
    k: usize,
    stride: usize,
    pad: usize,
    l_out: usize,
    col_t: &mut [T],
) {
    let ck = c_in * k;
    for lo in 0..l_out {
        let row = &mut col_t[lo * ck..(lo + 1) * ck];
        for ci in 0..c_in {
            let xrow = &x[ci * l..(ci + 1) * l];
            for kk in 0..k {
                let src = (lo * stride + kk) as isize - pad as isize;
                row[ci * k + kk] = if src >= 0 && (src as usize) < l {
                    xrow[src as usize]
                } else {
                    T::ZERO
                };
            }
        }
    }
}

fn col2im_add<T: Scalar>(
    col: &[T],
    c_in: usize,
    l: usize,
    k: usize,
    stride: usize,
    pad: usize,
    l_out: usize,
    x_grad: &mut [T],
) {
    for ci in 0..c_in {
        let xrow = &mut x_grad[ci * l..(ci + 1) * l];
        for kk in 0..k {
            let crow = &col[(ci * k + kk) * l_out..(ci * k + kk + 1) * l_out];
            for (lo, &g) in crow.iter().enumerate() {
                let src = (lo * stride + kk) as isize - pad as isize;
                if src >= 0 && (src as usize) < l {
                    xrow[src as usize] += g;
                }
            }
        }
    }
}

/// 1-D convolution with zero padding.
///
/// input `[b, c_in, l]`, weight `[c_out, c_in, k]`, bias `[c_out]`
/// -> `[b, c_out, l_out]`.
pub fn conv1d_forward<T: Scalar>(
    input: &Tensor<T>,
    weight: &Tensor<T>,
    bias: &Tensor<T>,
    stride: usize,
    pad: usize,
) -> Result<Tensor<T>, NnError> {
    let (b, c_in, l) = expect_3d("conv1d", input)?;
    let (c_out, w_cin, k) = expect_3d("conv1d", weight)?;
    if w_cin != c_in || bias.shape() != [c_out] || stride == 0 {
        return Err(NnError::Dimension {
            op: "conv1d",
            detail: format!(
                "input {:?} weight {:?} bias {:?} stride {}",
                input.shape(),
                weight.shape(),
                bias.shape(),
                stride
            ),
        });
    }
    let l_out = conv1d_output_len(l, k, stride, pad).ok_or(NnError::Dimension {
        op: "conv1d",
        detail: format!("kernel {k} does not fit input {l} with pad {pad}"),
    })?;

    let mut out = Tensor::zeros(&[b, c_out, l_out]);
    let per_in = c_in * l;
    let per_out = c_out * l_out;
    let ranges = chunk_ranges(b);
    let items = carve_mut(out.data_mut(), &ranges, per_out);
    let xdata = input.data();
    let wdata = weight.data();
    let bdata = bias.data();
    parallel_map(items, |_, (range, out_chunk)| {
        let mut col = vec![T::ZERO; c_in * k * l_out];
        for (local, bi) in range.enumerate() {
            let x = &xdata[bi * per_in..(bi + 1) * per_in];
            im2col(x, c_in, l, k, stride, pad, l_out, &mut col);
            let o = &mut out_chunk[local * per_out..(local + 1) * per_out];
            T::gemm_nn(c_out, c_in * k, l_out, wdata, &col, o);
            for co in 0..c_out {
                let bv = bdata[co];
                for v in &mut o[co * l_out..(co + 1) * l_out] {
                    *v += bv;
                }
            }
        }
    });
    out.debug_assert_finite("conv1d");
    Ok(out)
}

/// Gradients of [`conv1d_forward`] with respect to input, weight and bias.
pub fn conv1d_backward<T: Scalar>(
    input: &Tensor<T>,
    weight: &Tensor<T>,
    stride: usize,
    pad: usize,
    grad_out: &Tensor<T>,
) -> Result<(Tensor<T>, Tensor<T>, Tensor<T>), NnError> {
    let (b, c_in, l) = expect_3d("conv1d_backward", input)?;
    let (c_out, _, k) = expect_3d("conv1d_backward", weight)?;
    let (gb, gco, l_out) = expect_3d("conv1d_backward", grad_out)?;
    if gb != b || gco != c_out {
        return Err(NnError::Dimension {
            op: "conv1d_backward",
            detail: format!("grad_out {:?} vs batch {b} c_out {c_out}", grad_out.shape()),
        });
    }

    // weight transposed once: [c_in*k, c_out]
    let mut wt = vec![T::ZERO; c_in * k * c_out];
    for co in 0..c_out {
        for ik in 0..c_in * k {
            wt[ik * c_out + co] = weight.data()[co * c_in * k + ik];
        }
    }

    let mut grad_input = Tensor::zeros(&[b, c_in, l]);
    let per_in = c_in * l;
    let per_out = c_out * l_out;
    let ranges = chunk_ranges(b);
    let items = carve_mut(grad_input.data_mut(), &ranges, per_in);
    let xdata = input.data();
    let gydata = grad_out.data();

    // each chunk returns its partial weight/bias gradients; the reduction
    // below runs in chunk order for reproducibility
    let partials = parallel_map(items, |_, (range, gin_chunk)| {
        let mut col_t = vec![T::ZERO; c_in * k * l_out];
        let mut gcol = vec![T::ZERO; c_in * k * l_out];
        let mut gw = vec![T::ZERO; c_out * c_in * k];
        let mut gbias = vec![0.0f64; c_out];
        for (local, bi) in range.enumerate() {
            let gy = &gydata[bi * per_out..(bi + 1) * per_out];
            // grad wrt input: W^T (c_in*k, c_out) x gy (c_out, l_out)
            for v in gcol.iter_mut() {
                *v = T::ZERO;
            }
            T::gemm_nn(c_in * k, c_out, l_out, &wt, gy, &mut gcol);
            col2im_add(
                &gcol,
                c_in,
                l,
                k,
                stride,
                pad,
                l_out,
                &mut gin_chunk[local * per_in..(local + 1) * per_in],
            );
            // grad wrt weight: gy (c_out, l_out) x col_t (l_out, c_in*k)
            let x = &xdata[bi * per_in..(bi + 1) * per_in];
            im2col_t(x, c_in, l, k, stride, pad, l_out, &mut col_t);
            T::gemm_nn(c_out, l_out, c_in * k, gy, &col_t, &mut gw);
            for co in 0..c_out {
                let mut s = 0.0f64;
                for lo in 0..l_out {
                    s += gy[co * l_out + lo].to_f64();
                }
                gbias[co] += s;
            }
        }
        (gw, gbias)
    });

    let mut grad_weight = Tensor::zeros(&[c_out, c_in, k]);
    let mut grad_bias_acc = vec![0.0f64; c_out];
    for (gw, gbias) in partials {
        for (dst, src) in grad_weight.data_mut().iter_mut().zip(gw.iter()) {
            *dst += *src;
        }
        for (dst, src) in grad_bias_acc.iter_mut().zip(gbias.iter()) {
            *dst += *src;
        }
    }
    let grad_bias = Tensor::from_vec(
        &[c_out],
        grad_bias_acc.into_iter().map(T::from_f64).collect(),
    );
    Ok((grad_input, grad_weight, grad_bias))
}

/// Affine map: input `[b, d_in]`, weight `[d_out, d_in]`, bias `[d_out]`
/// -> `[b, d_out]`.
pub fn linear_forward<T: Scalar>(
    input: &Tensor<T>,
    weight: &Tensor<T>,
    bias: &Tensor<T>,
) -> Result<Tensor<T>, NnError> {
    let (b, d_in) = expect_2d("linear", input)?;
    let (d_out, w_in) = expect_2d("linear", weight)?;
    if w_in != d_in || bias.shape() != [d_out] {
        return Err(NnError::Dimension {
            op: "linear",
            detail: format!(
                "input {:?} weight {:?} bias {:?}",
                input.shape(),
                weight.shape(),
                bias.shape()
            ),
        });
    }
    let mut out = Tensor::zeros(&[b, d_out]);
    T::gemm_nt(b, d_in, d_out, input.data(), weight.data(), out.data_mut());
    for bi in 0..b {
        for (o, bv) in out.data_mut()[bi * d_out..(bi + 1) * d_out]
            .iter_mut()
            .zip(bias.data())
        {
            *o += *bv;
        }
    }
    out.debug_assert_finite("linear");
    Ok(out)
}

pub fn linear_backward<T: Scalar>(
    input: &Tensor<T>,
    weight: &Tensor<T>,
    grad_out: &Tensor<T>,
) -> Result<(Tensor<T>, Tensor<T>, Tensor<T>), NnError> {
    let (b, d_in) = expect_2d("linear_backward", input)?;
    let (d_out, _) = expect_2d("linear_backward", weight)?;
    if grad_out.shape() != [b, d_out] {
        return Err(NnError::Dimension {
            op: "linear_backward",
            detail: format!("grad_out {:?}", grad_out.shape()),
        });
    }
    let mut grad_input = Tensor::zeros(&[b, d_in]);
    T::gemm_nn(b, d_out, d_in, grad_out.data(), weight.data(), grad_input.data_mut());

    // gy^T [d_out, b]
    let mut gyt = vec![T::ZERO; d_out * b];
    for bi in 0..b {
        for o in 0..d_out {
            gyt[o * b + bi] = grad_out.data()[bi * d_out + o];
        }
    }
    let mut grad_weight = Tensor::zeros(&[d_out, d_in]);
    T::gemm_nn(d_out, b, d_in, &gyt, input.data(), grad_weight.data_mut());

    let mut gbias = vec![0.0f64; d_out];
    for bi in 0..b {
        for o in 0..d_out {
            gbias[o] += grad_out.data()[bi * d_out + o].to_f64();
        }
    }
    let grad_bias = Tensor::from_vec(&[d_out], gbias.into_iter().map(T::from_f64).collect());
    Ok((grad_input, grad_weight, grad_bias))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BnMode {
    Train,
    Eval,
}

/// Per-channel running statistics, serialized with checkpoints.
#[derive(Debug, Clone)]
pub struct BnStats<T: Scalar> {
    pub mean: Tensor<T>,
    pub var: Tensor<T>,
}

impl<T: Scalar> BnStats<T> {
    pub fn new(channels: usize) -> Self {
        let mut var = Tensor::zeros(&[channels]);
        var.fill(T::ONE);
        BnStats {
            mean: Tensor::zeros(&[channels]),
            var,
        }
    }
}

/// Batch statistics the backward pass needs.
#[derive(Debug, Clone)]
pub struct BnCache<T: Scalar> {
    pub mean: Vec<T>,
    pub inv_std: Vec<T>,
}

fn bn_dims<T: Scalar>(op: &'static str, x: &Tensor<T>) -> Result<(usize, usize, usize), NnError> {
    match *x.shape() {
        [b, c] => Ok((b, c, 1)),
        [b, c, l] => Ok((b, c, l)),
        _ => Err(NnError::Dimension {
            op,
            detail: format!("expected [b,c] or [b,c,l], got {:?}", x.shape()),
        }),
    }
}

/// Batch normalization over the channel axis of `[b, c]` or `[b, c, l]`.
///
/// Train mode standardizes by batch statistics (population variance) and
/// updates `running`; eval mode applies the running statistics. The returned
/// cache is present only in train mode.
#[allow(clippy::too_many_arguments)]
pub fn batchnorm_forward<T: Scalar>(
    input: &Tensor<T>,
    gamma: &Tensor<T>,
    beta: &Tensor<T>,
    running: &mut BnStats<T>,
    mode: BnMode,
    eps: f64,
    momentum: f64,
) -> Result<(Tensor<T>, Option<BnCache<T>>), NnError> {
    let (b, c, l) = bn_dims("batchnorm1d", input)?;
    if gamma.shape() != [c] || beta.shape() != [c] {
        return Err(NnError::Dimension {
            op: "batchnorm1d",
            detail: format!("gamma {:?} beta {:?} vs c={c}", gamma.shape(), beta.shape()),
        });
    }
    let (mean, inv_std, cache) = match mode {
        BnMode::Train => {
            if b < 2 {
                return Err(NnError::BatchTooSmall {
                    op: "batchnorm1d",
                    got: b,
                    need: 2,
                });
            }
            let (mean, var) = channel_stats(input.data(), b, c, l);
            let n = T::from_f64;
            for ch in 0..c {
                let m = running.mean.data()[ch].to_f64();
                let v = running.var.data()[ch].to_f64();
                running.mean.data_mut()[ch] = n(m * (1.0 - momentum) + mean[ch] * momentum);
                running.var.data_mut()[ch] = n(v * (1.0 - momentum) + var[ch] * momentum);
            }
            let mean_t: Vec<T> = mean.iter().copied().map(n).collect();
            let inv: Vec<T> = var.iter().map(|v| n(1.0 / (v + eps).sqrt())).collect();
            (
                mean_t.clone(),
                inv.clone(),
                Some(BnCache {
                    mean: mean_t,
                    inv_std: inv,
                }),
            )
        }
        BnMode::Eval => {
            let mean_t: Vec<T> = running.mean.data().to_vec();
            let inv: Vec<T> = running
                .var
                .data()
                .iter()
                .map(|v| T::from_f64(1.0 / (v.to_f64() + eps).sqrt()))
                .collect();
            (mean_t, inv, None)
        }
    };

    let mut out = Tensor::zeros(input.shape());
    let per = c * l;
    let ranges = chunk_ranges(b);
    let items = carve_mut(out.data_mut(), &ranges, per);
    let xdata = input.data();
    let (gm, bt) = (gamma.data(), beta.data());
    parallel_map(items, |_, (range, chunk)| {
        for (local, bi) in range.enumerate() {
            let x = &xdata[bi * per..(bi + 1) * per];
            let y = &mut chunk[local * per..(local + 1) * per];
            for ch in 0..c {
                let (m, w, g, be) = (mean[ch], inv_std[ch], gm[ch], bt[ch]);
                for li in 0..l {
                    y[ch * l + li] = (x[ch * l + li] - m) * w * g + be;
                }
            }
        }
    });
    out.debug_assert_finite("batchnorm1d");
    Ok((out, cache))
}

/// Gradients of train-mode batch normalization. `input` is the tensor the
/// forward pass saw; gamma/beta gradients come back alongside it.
pub fn batchnorm_backward<T: Scalar>(
    input: &Tensor<T>,
    gamma: &Tensor<T>,
    cache: &BnCache<T>,
    grad_out: &Tensor<T>,
) -> Result<(Tensor<T>, Tensor<T>, Tensor<T>), NnError> {
    let (b, c, l) = bn_dims("batchnorm1d_backward", input)?;
    if grad_out.shape() != input.shape() {
        return Err(NnError::Dimension {
            op: "batchnorm1d_backward",
            detail: format!("grad_out {:?} vs input {:?}", grad_out.shape(), input.shape()),
        });
    }
    let n = (b * l) as f64;
    let per = c * l;
    let xdata = input.data();
    let gydata = grad_out.data();

    // per-channel sums of gxhat and gxhat*xhat, reduced in chunk order
    let ranges = chunk_ranges(b);
    let partials = parallel_map(ranges.clone(), |_, range| {
        let mut s1 = vec![0.0f64; c]; // sum gy
        let mut s2 = vec![0.0f64; c]; // sum gy * xhat
        for bi in range {
            let x = &xdata[bi * per..(bi + 1) * per];
            let gy = &gydata[bi * per..(bi + 1) * per];
            for ch in 0..c {
                let m = cache.mean[ch].to_f64();
                let w = cache.inv_std[ch].to_f64();
                let mut a = 0.0f64;
                let mut bsum = 0.0f64;
                for li in 0..l {
                    let g = gy[ch * l + li].to_f64();
                    let xh = (x[ch * l + li].to_f64() - m) * w;
                    a += g;
                    bsum += g * xh;
                }
                s1[ch] += a;
                s2[ch] += bsum;
            }
        }
        (s1, s2)
    });
    let mut sum_gy = vec![0.0f64; c];
    let mut sum_gy_xhat = vec![0.0f64; c];
    for (s1, s2) in partials {
        for ch in 0..c {
            sum_gy[ch] += s1[ch];
            sum_gy_xhat[ch] += s2[ch];
        }
    }

    let grad_gamma = Tensor::from_vec(&[c], sum_gy_xhat.iter().map(|&v| T::from_f64(v)).collect());
    let grad_beta = Tensor::from_vec(&[c], sum_gy.iter().map(|&v| T::from_f64(v)).collect());

    let mut grad_input = Tensor::zeros(input.shape());
    let items = carve_mut(grad_input.data_mut(), &ranges, per);
    let gm = gamma.data();
    parallel_map(items, |_, (range, chunk)| {
        for (local, bi) in range.enumerate() {
            let x = &xdata[bi * per..(bi + 1) * per];
            let gy = &gydata[bi * per..(bi + 1) * per];
            let gx = &mut chunk[local * per..(local + 1) * per];
            for ch in 0..c {
                let m = cache.mean[ch].to_f64();
                let w = cache.inv_std[ch].to_f64();
                let g = gm[ch].to_f64();
                let mg = sum_gy[ch] / n;
                let mgx = sum_gy_xhat[ch] / n;
                for li in 0..l {
                    let xh = (x[ch * l + li].to_f64() - m) * w;
                    let gxh = gy[ch * l + li].to_f64() * g;
                    gx[ch * l + li] = T::from_f64(w * (gxh - g * mg - xh * g * mgx));
                }
            }
        }
    });
    Ok((grad_input, grad_gamma, grad_beta))
}

fn channel_stats<T: Scalar>(data: &[T], b: usize, c: usize, l: usize) -> (Vec<f64>, Vec<f64>) {
    let per = c * l;
    let ranges = chunk_ranges(b);
    let partials = parallel_map(ranges, |_, range| {
        let mut sum = vec![0.0f64; c];
        let mut sumsq = vec![0.0f64; c];
        for bi in range {
            let x = &data[bi * per..(bi + 1) * per];
            for ch in 0..c {
                let mut s = 0.0f64;
                let mut q = 0.0f64;
                for li in 0..l {
                    let v = x[ch * l + li].to_f64();
                    s += v;
                    q += v * v;
                }
                sum[ch] += s;
                sumsq[ch] += q;
            }
        }
        (sum, sumsq)
    });
    let mut sum = vec![0.0f64; c];
    let mut sumsq = vec![0.0f64; c];
    for (s, q) in partials {
        for ch in 0..c {
            sum[ch] += s[ch];
            sumsq[ch] += q[ch];
        }
    }
    let n = (b * l) as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let var: Vec<f64> = sumsq
        .iter()
        .zip(mean.iter())
        .map(|(q, m)| (q / n - m * m).max(0.0))
        .collect();
    (mean, var)
}

/// Elementwise `max(0, x)`.
pub fn relu_forward<T: Scalar>(input: &Tensor<T>) -> Tensor<T> {
    let mut out = input.clone();
    for v in out.data_mut() {
        *v = v.maximum(T::ZERO);
    }
    out
}

/// ReLU gradient, masked by the forward *output* (`y > 0`).
pub fn relu_backward<T: Scalar>(output: &Tensor<T>, grad_out: &Tensor<T>) -> Tensor<T> {
    assert_eq!(output.shape(), grad_out.shape());
    let mut gx = grad_out.clone();
    for (g, y) in gx.data_mut().iter_mut().zip(output.data()) {
        if *y <= T::ZERO {
            *g = T::ZERO;
        }
    }
    gx
}

/// Mean over the time axis: `[b, c, l]` -> `[b, c]`.
pub fn mean_pool_time_forward<T: Scalar>(input: &Tensor<T>) -> Result<Tensor<T>, NnError> {
    let (b, c, l) = expect_3d("mean_pool_time", input)?;
    let mut out = Tensor::zeros(&[b, c]);
    let inv = 1.0 / l as f64;
    for bi in 0..b {
        for ch in 0..c {
            let row = &input.data()[(bi * c + ch) * l..(bi * c + ch + 1) * l];
            let s: f64 = row.iter().map(|v| v.to_f64()).sum();
            out.data_mut()[bi * c + ch] = T::from_f64(s * inv);
        }
    }
    Ok(out)
}

pub fn mean_pool_time_backward<T: Scalar>(
    input_shape: &[usize],
    grad_out: &Tensor<T>,
) -> Tensor<T> {
    let (b, c, l) = (input_shape[0], input_shape[1], input_shape[2]);
    assert_eq!(grad_out.shape(), &[b, c]);
    let mut gx = Tensor::zeros(input_shape);
    let inv = T::from_f64(1.0 / l as f64);
    for bi in 0..b {
        for ch in 0..c {
            let g = grad_out.data()[bi * c + ch] * inv;
            for v in &mut gx.data_mut()[(bi * c + ch) * l..(bi * c + ch + 1) * l] {
                *v = g;
            }
        }
    }
    gx
}

fn expect_3d<T: Scalar>(op: &'static str, t: &Tensor<T>) -> Result<(usize, usize, usize), NnError> {
    match *t.shape() {
        [a, b, c] => Ok((a, b, c)),
        _ => Err(NnError::Dimension {
            op,
            detail: format!("expected 3-d tensor, got {:?}", t.shape()),
        }),
    }
}

fn expect_2d<T: Scalar>(op: &'static str, t: &Tensor<T>) -> Result<(usize, usize), NnError> {
    match *t.shape() {
        [a, b] => Ok((a, b)),
        _ => Err(NnError::Dimension {
            op,
            detail: format!("expected 2-d tensor, got {:?}", t.shape()),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conv_output_length_formula() {
        // (20 - 10) / 5 + 1 = 3
        assert_eq!(conv1d_output_len(20, 10, 5, 0), Some(3));
        assert_eq!(conv1d_output_len(2, 4, 2, 0), None);
        assert_eq!(conv1d_output_len(2, 4, 2, 1), Some(1));
    }

    #[test]
    fn conv_identity_kernel_passes_input_through() {
        let input = Tensor::<f64>::from_vec(&[1, 1, 5], vec![1.0, -2.0, 3.0, 0.5, 4.0]);
        let weight = Tensor::<f64>::from_vec(&[1, 1, 1], vec![1.0]);
        let bias = Tensor::<f64>::zeros(&[1]);
        let out = conv1d_forward(&input, &weight, &bias, 1, 0).unwrap();
        assert_eq!(out.data(), input.data());
    }

    #[test]
    fn conv_length_example() {
        let input = Tensor::<f64>::zeros(&[2, 1, 20]);
        let weight = Tensor::<f64>::zeros(&[3, 1, 10]);
        let bias = Tensor::<f64>::zeros(&[3]);
        let out = conv1d_forward(&input, &weight, &bias, 5, 0).unwrap();
        assert_eq!(out.shape(), &[2, 3, 3]);
    }

    #[test]
    fn conv_shape_mismatch_is_dimension_error() {
        let input = Tensor::<f64>::zeros(&[1, 2, 10]);
        let weight = Tensor::<f64>::zeros(&[4, 3, 3]); // c_in mismatch
        let bias = Tensor::<f64>::zeros(&[4]);
        assert!(matches!(
            conv1d_forward(&input, &weight, &bias, 1, 0),
            Err(NnError::Dimension { .. })
        ));
    }

    #[test]
    fn linear_hand_arithmetic() {
        // weight [[1,2]], bias [3], input [4,5] -> 1*4 + 2*5 + 3 = 17
        let input = Tensor::<f64>::from_vec(&[1, 2], vec![4.0, 5.0]);
        let weight = Tensor::<f64>::from_vec(&[1, 2], vec![1.0, 2.0]);
        let bias = Tensor::<f64>::from_vec(&[1], vec![3.0]);
        let out = linear_forward(&input, &weight, &bias).unwrap();
        assert_eq!(out.data(), &[17.0]);
    }

    #[test]
    fn linear_identity() {
        let input = Tensor::<f64>::from_vec(&[2, 2], vec![1.0, 2.0, 3.0, 4.0]);
        let weight = Tensor::<f64>::from_vec(&[2, 2], vec![1.0, 0.0, 0.0, 1.0]);
        let bias = Tensor::<f64>::zeros(&[2]);
        let out = linear_forward(&input, &weight, &bias).unwrap();
        assert_eq!(out.data(), input.data());
    }

    #[test]
    fn batchnorm_beta_shift_sets_train_mode_mean() {
        let input = Tensor::<f64>::from_vec(&[4, 2], vec![1.0, 10.0, 2.0, 20.0, 3.0, 30.0, 4.0, 40.0]);
        let gamma = Tensor::<f64>::from_vec(&[2], vec![1.0, 1.0]);
        let beta = Tensor::<f64>::from_vec(&[2], vec![5.0, -7.0]);
        let mut running = BnStats::new(2);
        let (out, cache) =
            batchnorm_forward(&input, &gamma, &beta, &mut running, BnMode::Train, 1e-5, 0.1)
                .unwrap();
        assert!(cache.is_some());
        for ch in 0..2 {
            let mean: f64 = (0..4).map(|b| out.data()[b * 2 + ch]).sum::<f64>() / 4.0;
            assert!((mean - beta.data()[ch]).abs() < 1e-12);
        }
    }

    #[test]
    fn batchnorm_identity_on_standardized_batch() {
        // zero-mean unit-variance batch, gamma=1 beta=0 -> output ~ input
        let input = Tensor::<f64>::from_vec(&[2, 1], vec![1.0, -1.0]);
        let gamma = Tensor::<f64>::from_vec(&[1], vec![1.0]);
        let beta = Tensor::<f64>::zeros(&[1]);
        let mut running = BnStats::new(1);
        let (out, _) =
            batchnorm_forward(&input, &gamma, &beta, &mut running, BnMode::Train, 1e-9, 0.1)
                .unwrap();
        for (o, i) in out.data().iter().zip(input.data()) {
            assert!((o - i).abs() < 1e-6);
        }
    }

    #[test]
    fn batchnorm_train_rejects_batch_of_one() {
        let input = Tensor::<f64>::zeros(&[1, 3]);
        let gamma = Tensor::<f64>::from_vec(&[3], vec![1.0; 3]);
        let beta = Tensor::<f64>::zeros(&[3]);
        let mut running = BnStats::new(3);
        assert!(matches!(
            batchnorm_forward(&input, &gamma, &beta, &mut running, BnMode::Train, 1e-5, 0.1),
            Err(NnError::BatchTooSmall { .. })
        ));
        // eval mode is fine with batch 1
        assert!(
            batchnorm_forward(&input, &gamma, &beta, &mut running, BnMode::Eval, 1e-5, 0.1)
                .is_ok()
        );
    }

    #[test]
    fn relu_clamps_negatives() {
        let x = Tensor::<f64>::from_vec(&[2], vec![-1.0, 2.0]);
        assert_eq!(relu_forward(&x).data(), &[0.0, 2.0]);
    }

    #[test]
    fn mean_pool_constant_and_singleton() {
        let c = Tensor::<f64>::from_vec(&[1, 2, 3], vec![7.0; 6]);
        let out = mean_pool_time_forward(&c).unwrap();
        assert_eq!(out.data(), &[7.0, 7.0]);

        let single = Tensor::<f64>::from_vec(&[1, 2, 1], vec![3.0, -4.0]);
        let out = mean_pool_time_forward(&single).unwrap();
        assert_eq!(out.shape(), &[1, 2]);
        assert_eq!(out.data(), &[3.0, -4.0]);
    }
}
