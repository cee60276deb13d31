//! Small row-major matrix kernels backing conv1d and linear layers.
//!
//! `gemm_nn`: C[m,n] += A[m,k] * B[k,n].
//! `gemm_nt`: C[m,n] += A[m,k] * B[n,k]^T.
//!
//! The f32 entry points dispatch to an AVX2+FMA microkernel when the CPU
//! supports it; the scalar fallbacks are the reference semantics. Loop order
//! is fixed in every path, so results are reproducible run to run on the
//! same machine regardless of thread count.

use super::Scalar;

pub(crate) fn gemm_nn_scalar<T: Scalar>(m: usize, k: usize, n: usize, a: &[T], b: &[T], c: &mut [T]) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * n);
    for i in 0..m {
        let crow = &mut c[i * n..(i + 1) * n];
        for kk in 0..k {
            let aik = a[i * k + kk];
            let brow = &b[kk * n..(kk + 1) * n];
            for j in 0..n {
                crow[j] += aik * brow[j];
            }
        }
    }
}

pub(crate) fn gemm_nt_scalar<T: Scalar>(m: usize, k: usize, n: usize, a: &[T], b: &[T], c: &mut [T]) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), n * k);
    debug_assert_eq!(c.len(), m * n);
    for i in 0..m {
        let arow = &a[i * k..(i + 1) * k];
        for j in 0..n {
            let brow = &b[j * k..(j + 1) * k];
            let mut s0 = T::ZERO;
            let mut s1 = T::ZERO;
            let mut s2 = T::ZERO;
            let mut s3 = T::ZERO;
            let mut kk = 0;
            while kk + 4 <= k {
                s0 += arow[kk] * brow[kk];
                s1 += arow[kk + 1] * brow[kk + 1];
                s2 += arow[kk + 2] * brow[kk + 2];
                s3 += arow[kk + 3] * brow[kk + 3];
                kk += 4;
            }
            let mut s = (s0 + s1) + (s2 + s3);
            while kk < k {
                s += arow[kk] * brow[kk];
                kk += 1;
            }
            c[i * n + j] += s;
        }
    }
}

#[cfg(target_arch = "x86_64")]
fn simd_available() -> bool {
    use std::sync::OnceLock;
    static AVAIL: OnceLock<bool> = OnceLock::new();
    *AVAIL.get_or_init(|| is_x86_feature_detected!("avx2") && is_x86_feature_detected!("fma"))
}

#[cfg(target_arch = "x86_64")]
fn avx512_available() -> bool {
    use std::sync::OnceLock;
    static AVAIL: OnceLock<bool> = OnceLock::new();
    *AVAIL.get_or_init(|| is_x86_feature_detected!("avx512f"))
}

pub(crate) fn gemm_nn_f32(m: usize, k: usize, n: usize, a: &[f32], b: &[f32], c: &mut [f32]) {
    #[cfg(target_arch = "x86_64")]
    {
        if n >= 32 && avx512_available() {
            unsafe { gemm_nn_avx512(m, k, n, a, b, c) };
            return;
        }
        if n >= 16 && simd_available() {
            unsafe { gemm_nn_avx2(m, k, n, a, b, c) };
            return;
        }
    }
    gemm_nn_scalar(m, k, n, a, b, c);
}

pub(crate) fn gemm_nt_f32(m: usize, k: usize, n: usize, a: &[f32], b: &[f32], c: &mut [f32]) {
    #[cfg(target_arch = "x86_64")]
    {
        if k >= 16 && avx512_available() {
            unsafe { gemm_nt_avx512(m, k, n, a, b, c) };
            return;
        }
        if k >= 8 && simd_available() {
            unsafe { gemm_nt_avx2(m, k, n, a, b, c) };
            return;
        }
    }
    gemm_nt_scalar(m, k, n, a, b, c);
}

/// As the AVX2 variant, two 512-bit lanes wide per C row. Both operand
/// panels are packed per k-block: A once per block, B once per column tile,
/// so the microkernel streams contiguous L1-resident data.
#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx512f")]
unsafe fn gemm_nn_avx512(m: usize, k: usize, n: usize, a: &[f32], b: &[f32], c: &mut [f32]) {
    use std::arch::x86_64::*;
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * n);

    const MR: usize = 4;
    const NR: usize = 32;
    const KB: usize = 256;
    let m_main = m - m % MR;
    let n_main = n - n % NR;

    thread_local! {
        static SCRATCH: std::cell::RefCell<(Vec<f32>, Vec<f32>)> =
            const { std::cell::RefCell::new((Vec::new(), Vec::new())) };
    }
    SCRATCH.with(|cell| {
    let mut guard = cell.borrow_mut();
    let (apanel, bpanel) = &mut *guard;
    apanel.resize(m_main.max(MR) * KB, 0.0);
    bpanel.resize(KB * NR, 0.0);
    let mut k0 = 0;
    while k0 < k {
        let kb = KB.min(k - k0);
        // pack A[i, k0..k0+kb] as [i_block][kk][4]
        for i0 in (0..m_main).step_by(MR) {
            let dst_base = i0 * KB; // block-major, fixed stride
            for kk in 0..kb {
                for r in 0..MR {
                    apanel[dst_base + kk * MR + r] = a[(i0 + r) * k + k0 + kk];
                }
            }
        }
        for j0 in (0..n_main).step_by(NR) {
            for kk in 0..kb {
                let src = (k0 + kk) * n + j0;
                bpanel[kk * NR..kk * NR + NR].copy_from_slice(&b[src..src + NR]);
            }
            let bp = bpanel.as_ptr();
            for i0 in (0..m_main).step_by(MR) {
                let ap = apanel.as_ptr().add(i0 * KB);
                let cp = c.as_mut_ptr();
                let mut acc00 = _mm512_loadu_ps(cp.add(i0 * n + j0));
                let mut acc01 = _mm512_loadu_ps(cp.add(i0 * n + j0 + 16));
                let mut acc10 = _mm512_loadu_ps(cp.add((i0 + 1) * n + j0));
                let mut acc11 = _mm512_loadu_ps(cp.add((i0 + 1) * n + j0 + 16));
                let mut acc20 = _mm512_loadu_ps(cp.add((i0 + 2) * n + j0));
                let mut acc21 = _mm512_loadu_ps(cp.add((i0 + 2) * n + j0 + 16));
                let mut acc30 = _mm512_loadu_ps(cp.add((i0 + 3) * n + j0));
                let mut acc31 = _mm512_loadu_ps(cp.add((i0 + 3) * n + j0 + 16));
                for kk in 0..kb {
                    let b0 = _mm512_loadu_ps(bp.add(kk * NR));
                    let b1 = _mm512_loadu_ps(bp.add(kk * NR + 16));
                    let a0 = _mm512_set1_ps(*ap.add(kk * MR));
                    acc00 = _mm512_fmadd_ps(a0, b0, acc00);
                    acc01 = _mm512_fmadd_ps(a0, b1, acc01);
                    let a1 = _mm512_set1_ps(*ap.add(kk * MR + 1));
                    acc10 = _mm512_fmadd_ps(a1, b0, acc10);
                    acc11 = _mm512_fmadd_ps(a1, b1, acc11);
                    let a2 = _mm512_set1_ps(*ap.add(kk * MR + 2));
                    acc20 = _mm512_fmadd_ps(a2, b0, acc20);
                    acc21 = _mm512_fmadd_ps(a2, b1, acc21);
                    let a3 = _mm512_set1_ps(*ap.add(kk * MR + 3));
                    acc30 = _mm512_fmadd_ps(a3, b0, acc30);
                    acc31 = _mm512_fmadd_ps(a3, b1, acc31);
                }
                _mm512_storeu_ps(cp.add(i0 * n + j0), acc00);
                _mm512_storeu_ps(cp.add(i0 * n + j0 + 16), acc01);
                _mm512_storeu_ps(cp.add((i0 + 1) * n + j0), acc10);
                _mm512_storeu_ps(cp.add((i0 + 1) * n + j0 + 16), acc11);
                _mm512_storeu_ps(cp.add((i0 + 2) * n + j0), acc20);
                _mm512_storeu_ps(cp.add((i0 + 2) * n + j0 + 16), acc21);
                _mm512_storeu_ps(cp.add((i0 + 3) * n + j0), acc30);
                _mm512_storeu_ps(cp.add((i0 + 3) * n + j0 + 16), acc31);
            }
        }
        k0 += kb;
    }
    });
    if m_main < m && n_main > 0 {
        for i in m_main..m {
            for kk in 0..k {
                let aik = a[i * k + kk];
                let brow = &b[kk * n..kk * n + n_main];
                let crow = &mut c[i * n..i * n + n_main];
                for j in 0..n_main {
                    crow[j] += aik * brow[j];
                }
            }
        }
    }
    // remaining columns in masked 16-wide tiles, all rows
    if n_main < n {
        let mut j0 = n_main;
        while j0 < n {
            let width = (n - j0).min(16);
            let mask: u16 = if width == 16 { !0 } else { (1u16 << width) - 1 };
            let mut i0 = 0;
            while i0 < m {
                let rows = (m - i0).min(4);
                let cp = c.as_mut_ptr();
                let mut acc = [_mm512_setzero_ps(); 4];
                for (r, slot) in acc.iter_mut().enumerate().take(rows) {
                    *slot = _mm512_maskz_loadu_ps(mask, cp.add((i0 + r) * n + j0));
                }
                for kk in 0..k {
                    let bv = _mm512_maskz_loadu_ps(mask, b.as_ptr().add(kk * n + j0));
                    for (r, slot) in acc.iter_mut().enumerate().take(rows) {
                        let av = _mm512_set1_ps(*a.as_ptr().add((i0 + r) * k + kk));
                        *slot = _mm512_fmadd_ps(av, bv, *slot);
                    }
                }
                for (r, slot) in acc.iter().enumerate().take(rows) {
                    _mm512_mask_storeu_ps(cp.add((i0 + r) * n + j0), mask, *slot);
                }
                i0 += rows;
            }
            j0 += width;
        }
    }
}

/// Dot-product kernel at 512-bit width, four B rows per pass.
#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx512f")]
unsafe fn gemm_nt_avx512(m: usize, k: usize, n: usize, a: &[f32], b: &[f32], c: &mut [f32]) {
    use std::arch::x86_64::*;
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), n * k);
    debug_assert_eq!(c.len(), m * n);

    let k_main = k - k % 16;
    let n_main = n - n % 8;
    for i in 0..m {
        let arow = &a[i * k..(i + 1) * k];
        for j0 in (0..n_main).step_by(8) {
            let mut acc = [_mm512_setzero_ps(); 8];
            for kk in (0..k_main).step_by(16) {
                let av = _mm512_loadu_ps(arow.as_ptr().add(kk));
                for (r, slot) in acc.iter_mut().enumerate() {
                    let bp = b.as_ptr().add((j0 + r) * k + kk);
                    *slot = _mm512_fmadd_ps(av, _mm512_loadu_ps(bp), *slot);
                }
            }
            for (r, slot) in acc.iter().enumerate() {
                let mut s = _mm512_reduce_add_ps(*slot);
                for kk in k_main..k {
                    s += arow[kk] * b[(j0 + r) * k + kk];
                }
                c[i * n + j0 + r] += s;
            }
        }
        for j in n_main..n {
            let brow = &b[j * k..(j + 1) * k];
            let mut acc = _mm512_setzero_ps();
            for kk in (0..k_main).step_by(16) {
                let av = _mm512_loadu_ps(arow.as_ptr().add(kk));
                acc = _mm512_fmadd_ps(av, _mm512_loadu_ps(brow.as_ptr().add(kk)), acc);
            }
            let mut s = _mm512_reduce_add_ps(acc);
            for kk in k_main..k {
                s += arow[kk] * brow[kk];
            }
            c[i * n + j] += s;
        }
    }
}

/// Packed, cache-blocked kernel. B panels of 16 columns are packed
/// contiguously per k-block so the inner microkernel streams from L1;
/// 4 C rows accumulate per pass.
#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2", enable = "fma")]
unsafe fn gemm_nn_avx2(m: usize, k: usize, n: usize, a: &[f32], b: &[f32], c: &mut [f32]) {
    use std::arch::x86_64::*;
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * n);

    const MR: usize = 4;
    const NR: usize = 16;
    const KB: usize = 256;
    let m_main = m - m % MR;
    let n_main = n - n % NR;

    thread_local! {
        static BPANEL: std::cell::RefCell<Vec<f32>> = const { std::cell::RefCell::new(Vec::new()) };
    }
    BPANEL.with(|cell| {
    let mut bpanel = cell.borrow_mut();
    bpanel.resize(KB * NR, 0.0);
    for j0 in (0..n_main).step_by(NR) {
        let mut k0 = 0;
        while k0 < k {
            let kb = KB.min(k - k0);
            // pack B[k0..k0+kb, j0..j0+NR] row-contiguous
            for kk in 0..kb {
                let src = (k0 + kk) * n + j0;
                bpanel[kk * NR..kk * NR + NR].copy_from_slice(&b[src..src + NR]);
            }
            let bp = bpanel.as_ptr();
            for i0 in (0..m_main).step_by(MR) {
                let cp = c.as_mut_ptr();
                let ap = a.as_ptr();
                let mut acc00 = _mm256_loadu_ps(cp.add(i0 * n + j0));
                let mut acc01 = _mm256_loadu_ps(cp.add(i0 * n + j0 + 8));
                let mut acc10 = _mm256_loadu_ps(cp.add((i0 + 1) * n + j0));
                let mut acc11 = _mm256_loadu_ps(cp.add((i0 + 1) * n + j0 + 8));
                let mut acc20 = _mm256_loadu_ps(cp.add((i0 + 2) * n + j0));
                let mut acc21 = _mm256_loadu_ps(cp.add((i0 + 2) * n + j0 + 8));
                let mut acc30 = _mm256_loadu_ps(cp.add((i0 + 3) * n + j0));
                let mut acc31 = _mm256_loadu_ps(cp.add((i0 + 3) * n + j0 + 8));
                for kk in 0..kb {
                    let b0 = _mm256_loadu_ps(bp.add(kk * NR));
                    let b1 = _mm256_loadu_ps(bp.add(kk * NR + 8));
                    let a0 = _mm256_set1_ps(*ap.add(i0 * k + k0 + kk));
                    acc00 = _mm256_fmadd_ps(a0, b0, acc00);
                    acc01 = _mm256_fmadd_ps(a0, b1, acc01);
                    let a1 = _mm256_set1_ps(*ap.add((i0 + 1) * k + k0 + kk));
                    acc10 = _mm256_fmadd_ps(a1, b0, acc10);
                    acc11 = _mm256_fmadd_ps(a1, b1, acc11);
                    let a2 = _mm256_set1_ps(*ap.add((i0 + 2) * k + k0 + kk));
                    acc20 = _mm256_fmadd_ps(a2, b0, acc20);
                    acc21 = _mm256_fmadd_ps(a2, b1, acc21);
                    let a3 = _mm256_set1_ps(*ap.add((i0 + 3) * k + k0 + kk));
                    acc30 = _mm256_fmadd_ps(a3, b0, acc30);
                    acc31 = _mm256_fmadd_ps(a3, b1, acc31);
                }
                _mm256_storeu_ps(cp.add(i0 * n + j0), acc00);
                _mm256_storeu_ps(cp.add(i0 * n + j0 + 8), acc01);
                _mm256_storeu_ps(cp.add((i0 + 1) * n + j0), acc10);
                _mm256_storeu_ps(cp.add((i0 + 1) * n + j0 + 8), acc11);
                _mm256_storeu_ps(cp.add((i0 + 2) * n + j0), acc20);
                _mm256_storeu_ps(cp.add((i0 + 2) * n + j0 + 8), acc21);
                _mm256_storeu_ps(cp.add((i0 + 3) * n + j0), acc30);
                _mm256_storeu_ps(cp.add((i0 + 3) * n + j0 + 8), acc31);
            }
            k0 += kb;
        }
    }
    });
    // bottom rows for the main column tiles
    if m_main < m && n_main > 0 {
        for i in m_main..m {
            for kk in 0..k {
                let aik = a[i * k + kk];
                let brow = &b[kk * n..kk * n + n_main];
                let crow = &mut c[i * n..i * n + n_main];
                for j in 0..n_main {
                    crow[j] += aik * brow[j];
                }
            }
        }
    }
    // right edge columns, all rows
    if n_main < n {
        for i in 0..m {
            for j in n_main..n {
                let mut s = 0.0f32;
                for kk in 0..k {
                    s += a[i * k + kk] * b[kk * n + j];
                }
                c[i * n + j] += s;
            }
        }
    }
}

/// Dot-product kernel: one A row against four B rows at a time.
#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2", enable = "fma")]
unsafe fn gemm_nt_avx2(m: usize, k: usize, n: usize, a: &[f32], b: &[f32], c: &mut [f32]) {
    use std::arch::x86_64::*;
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), n * k);
    debug_assert_eq!(c.len(), m * n);

    #[inline(always)]
    unsafe fn hsum(v: std::arch::x86_64::__m256) -> f32 {
        let hi = _mm256_extractf128_ps(v, 1);
        let lo = _mm256_castps256_ps128(v);
        let s = _mm_add_ps(lo, hi);
        let s = _mm_add_ps(s, _mm_movehl_ps(s, s));
        let s = _mm_add_ss(s, _mm_shuffle_ps(s, s, 1));
        _mm_cvtss_f32(s)
    }

    let k_main = k - k % 8;
    let n_main = n - n % 4;
    for i in 0..m {
        let arow = &a[i * k..(i + 1) * k];
        for j0 in (0..n_main).step_by(4) {
            let mut acc0 = _mm256_setzero_ps();
            let mut acc1 = _mm256_setzero_ps();
            let mut acc2 = _mm256_setzero_ps();
            let mut acc3 = _mm256_setzero_ps();
            let b0 = &b[j0 * k..];
            let b1 = &b[(j0 + 1) * k..];
            let b2 = &b[(j0 + 2) * k..];
            let b3 = &b[(j0 + 3) * k..];
            for kk in (0..k_main).step_by(8) {
                let av = _mm256_loadu_ps(arow.as_ptr().add(kk));
                acc0 = _mm256_fmadd_ps(av, _mm256_loadu_ps(b0.as_ptr().add(kk)), acc0);
                acc1 = _mm256_fmadd_ps(av, _mm256_loadu_ps(b1.as_ptr().add(kk)), acc1);
                acc2 = _mm256_fmadd_ps(av, _mm256_loadu_ps(b2.as_ptr().add(kk)), acc2);
                acc3 = _mm256_fmadd_ps(av, _mm256_loadu_ps(b3.as_ptr().add(kk)), acc3);
            }
            let mut s0 = hsum(acc0);
            let mut s1 = hsum(acc1);
            let mut s2 = hsum(acc2);
            let mut s3 = hsum(acc3);
            for kk in k_main..k {
                s0 += arow[kk] * b0[kk];
                s1 += arow[kk] * b1[kk];
                s2 += arow[kk] * b2[kk];
                s3 += arow[kk] * b3[kk];
            }
            c[i * n + j0] += s0;
            c[i * n + j0 + 1] += s1;
            c[i * n + j0 + 2] += s2;
            c[i * n + j0 + 3] += s3;
        }
        for j in n_main..n {
            let brow = &b[j * k..(j + 1) * k];
            let mut acc = _mm256_setzero_ps();
            for kk in (0..k_main).step_by(8) {
                let av = _mm256_loadu_ps(arow.as_ptr().add(kk));
                acc = _mm256_fmadd_ps(av, _mm256_loadu_ps(brow.as_ptr().add(kk)), acc);
            }
            let mut s = hsum(acc);
            for kk in k_main..k {
                s += arow[kk] * brow[kk];
            }
            c[i * n + j] += s;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_nn(m: usize, k: usize, n: usize, a: &[f32], b: &[f32]) -> Vec<f32> {
        let mut c = vec![0.0f64; m * n];
        for i in 0..m {
            for kk in 0..k {
                for j in 0..n {
                    c[i * n + j] += a[i * k + kk] as f64 * b[kk * n + j] as f64;
                }
            }
        }
        c.into_iter().map(|x| x as f32).collect()
    }

    fn pseudo_random(len: usize, seed: u64) -> Vec<f32> {
        let mut state = seed.wrapping_mul(0x9E3779B97F4A7C15) | 1;
        (0..len)
            .map(|_| {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                (state as f64 / u64::MAX as f64 * 2.0 - 1.0) as f32
            })
            .collect()
    }

    #[test]
    fn nn_matches_naive_on_odd_sizes() {
        for &(m, k, n) in &[(1, 1, 1), (3, 5, 7), (4, 10, 16), (9, 13, 37), (128, 40, 63)] {
            let a = pseudo_random(m * k, 1);
            let b = pseudo_random(k * n, 2);
            let expect = naive_nn(m, k, n, &a, &b);
            let mut c = vec![0.0f32; m * n];
            gemm_nn_f32(m, k, n, &a, &b, &mut c);
            for (x, y) in c.iter().zip(expect.iter()) {
                assert!((x - y).abs() < 1e-4, "{m}x{k}x{n}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn nt_matches_nn_with_transpose() {
        for &(m, k, n) in &[(2, 3, 4), (5, 8, 6), (7, 33, 9), (16, 64, 20)] {
            let a = pseudo_random(m * k, 3);
            let bt = pseudo_random(n * k, 4);
            // b[kk][j] = bt[j][kk]
            let mut b = vec![0.0f32; k * n];
            for j in 0..n {
                for kk in 0..k {
                    b[kk * n + j] = bt[j * k + kk];
                }
            }
            let expect = naive_nn(m, k, n, &a, &b);
            let mut c = vec![0.0f32; m * n];
            gemm_nt_f32(m, k, n, &a, &bt, &mut c);
            for (x, y) in c.iter().zip(expect.iter()) {
                assert!((x - y).abs() < 1e-4);
            }
        }
    }

    #[test]
    fn accumulates_into_c() {
        let a = vec![1.0f32, 2.0];
        let b = vec![3.0f32, 4.0];
        let mut c = vec![10.0f32];
        gemm_nn_f32(1, 2, 1, &a, &b, &mut c);
        assert_eq!(c[0], 21.0);
    }
}
