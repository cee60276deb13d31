//! Minimal radix-2 FFT, enough for spectral diagnostics of synthesized
//! audio and the oracle spectrum classifier used in validation.

/// In-place radix-2 decimation-in-time FFT; `re`/`im` lengths must be a
/// power of two.
pub fn fft(re: &mut [f64], im: &mut [f64]) {
    let n = re.len();
    assert_eq!(n, im.len());
    assert!(n.is_power_of_two(), "fft length must be a power of two");
    if n <= 1 {
        return;
    }
    // bit reversal
    let mut j = 0usize;
    for i in 0..n - 1 {
        if i < j {
            re.swap(i, j);
            im.swap(i, j);
        }
        let mut m = n >> 1;
        while m >= 1 && j & m != 0 {
            j ^= m;
            m >>= 1;
        }
        j |= m;
    }
    // butterflies
    let mut len = 2;
    while len <= n {
        let ang = -2.0 * std::f64::consts::PI / len as f64;
        let (wr, wi) = (ang.cos(), ang.sin());
        let mut i = 0;
        while i < n {
            let mut cur_r = 1.0f64;
            let mut cur_i = 0.0f64;
            for k in 0..len / 2 {
                let a = i + k;
                let b = i + k + len / 2;
                let tr = re[b] * cur_r - im[b] * cur_i;
                let ti = re[b] * cur_i + im[b] * cur_r;
                re[b] = re[a] - tr;
                im[b] = im[a] - ti;
                re[a] += tr;
                im[a] += ti;
                let nr = cur_r * wr - cur_i * wi;
                cur_i = cur_r * wi + cur_i * wr;
                cur_r = nr;
            }
            i += len;
        }
        len <<= 1;
    }
}

/// Log power in `n_bands` equal-width frequency bands up to `max_hz`.
/// The input is zero-padded to the next power of two.
pub fn log_band_spectrum(samples: &[f64], sample_rate: u32, n_bands: usize, max_hz: f64) -> Vec<f64> {
    let n = samples.len().next_power_of_two().max(2);
    let mut re = vec![0.0; n];
    let mut im = vec![0.0; n];
    re[..samples.len()].copy_from_slice(samples);
    fft(&mut re, &mut im);

    let bin_hz = sample_rate as f64 / n as f64;
    let max_bin = ((max_hz / bin_hz) as usize).min(n / 2);
    let per_band = (max_bin / n_bands).max(1);
    (0..n_bands)
        .map(|b| {
            let lo = b * per_band;
            let hi = ((b + 1) * per_band).min(max_bin).max(lo + 1);
            let power: f64 = (lo..hi).map(|k| re[k] * re[k] + im[k] * im[k]).sum();
            (power / (hi - lo) as f64).max(1e-20).ln()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn impulse_has_flat_spectrum() {
        let mut re = vec![0.0; 8];
        re[0] = 1.0;
        let mut im = vec![0.0; 8];
        fft(&mut re, &mut im);
        for k in 0..8 {
            assert!((re[k] - 1.0).abs() < 1e-12);
            assert!(im[k].abs() < 1e-12);
        }
    }

    #[test]
    fn sine_concentrates_at_its_bin() {
        let n = 256;
        let k0 = 13;
        let mut re: Vec<f64> = (0..n)
            .map(|i| (2.0 * std::f64::consts::PI * k0 as f64 * i as f64 / n as f64).cos())
            .collect();
        let mut im = vec![0.0; n];
        fft(&mut re, &mut im);
        let mags: Vec<f64> = (0..n)
            .map(|k| (re[k] * re[k] + im[k] * im[k]).sqrt())
            .collect();
        let peak = mags
            .iter()
            .take(n / 2)
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert_eq!(peak, k0);
        assert!((mags[k0] - n as f64 / 2.0).abs() < 1e-9);
    }
}
