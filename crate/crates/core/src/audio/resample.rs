//! Windowed-sinc polyphase resampling.
//!
//! The rate ratio is reduced to p/q; each of the p output phases gets a
//! precomputed Kaiser-windowed sinc kernel, normalized to unit DC gain.
//! Downsampling widens the kernel and lowers the cutoff to the target
//! Nyquist.

use super::Waveform;

const LOBES: usize = 24;
const KAISER_BETA: f64 = 10.0;

/// Resamples to `target_rate`; output length is
/// `round(len * target / source)`.
pub fn resample(w: &Waveform, target_rate: u32) -> Waveform {
    assert!(target_rate > 0, "target_rate must be positive");
    if target_rate == w.sample_rate {
        return w.clone();
    }
    let g = gcd(target_rate as u64, w.sample_rate as u64);
    let p = (target_rate as u64 / g) as usize; // upsample factor
    let q = (w.sample_rate as u64 / g) as usize; // downsample factor

    let out_len =
        ((w.samples.len() as f64) * target_rate as f64 / w.sample_rate as f64).round() as usize;

    // cutoff relative to the source rate; half-width in source samples
    let cutoff = 0.5 * (p as f64 / q as f64).min(1.0);
    let half_width = (LOBES as f64 / (2.0 * cutoff)).ceil() as isize;

    // kernel per output phase r: taps at integer source offsets j for
    // fractional position r/p
    let phases: Vec<Vec<f64>> = (0..p)
        .map(|r| {
            let frac = r as f64 / p as f64;
            let mut taps = Vec::with_capacity((2 * half_width + 1) as usize);
            let mut sum = 0.0;
            for j in -half_width..=half_width {
                let x = j as f64 - frac;
                let v = 2.0 * cutoff * sinc(2.0 * cutoff * x)
                    * kaiser(x / half_width as f64, KAISER_BETA);
                taps.push(v);
                sum += v;
            }
            // unit DC gain
            for t in &mut taps {
                *t /= sum;
            }
            taps
        })
        .collect();

    let src = &w.samples;
    let n_src = src.len() as isize;
    let mut out = Vec::with_capacity(out_len);
    for n in 0..out_len {
        // source position n*q/p = base + (r/p)
        let num = n * q;
        let base = (num / p) as isize;
        let phase = num % p;
        let taps = &phases[phase];
        let mut acc = 0.0;
        for (ti, j) in (-half_width..=half_width).enumerate() {
            let k = base + j;
            if k >= 0 && k < n_src {
                acc += src[k as usize] * taps[ti];
            }
        }
        out.push(acc);
    }

    Waveform {
        samples: out,
        sample_rate: target_rate,
        source_id: w.source_id.clone(),
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

/// Kaiser window on [-1, 1].
fn kaiser(r: f64, beta: f64) -> f64 {
    if r.abs() > 1.0 {
        return 0.0;
    }
    bessel_i0(beta * (1.0 - r * r).sqrt()) / bessel_i0(beta)
}

fn bessel_i0(x: f64) -> f64 {
    let half = x / 2.0;
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    for k in 1..64 {
        term *= (half / k as f64) * (half / k as f64);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}
