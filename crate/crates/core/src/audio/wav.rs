//! RIFF/WAVE PCM16 reading and writing.

use super::{AudioError, Waveform};
use std::path::Path;

fn format_err(path: &Path, detail: impl ToString) -> AudioError {
    AudioError::Format {
        path: path.display().to_string(),
        detail: detail.to_string(),
    }
}

/// Reads a 16-bit PCM wav file; samples scale to [-1, 1] by 1/32768 and the
/// source id is the filename stem. Multi-channel input is an error unless
/// `downmix` is set, in which case channels are averaged.
pub fn read_wav(path: &Path, downmix: bool) -> Result<Waveform, AudioError> {
    let reader = hound::WavReader::open(path).map_err(|e| format_err(path, e))?;
    let spec = reader.spec();
    if spec.bits_per_sample != 16 || spec.sample_format != hound::SampleFormat::Int {
        return Err(format_err(
            path,
            format!(
                "expected 16-bit PCM, got {}-bit {:?}",
                spec.bits_per_sample, spec.sample_format
            ),
        ));
    }
    if spec.channels != 1 && !downmix {
        return Err(AudioError::Channels {
            path: path.display().to_string(),
            channels: spec.channels,
        });
    }
    let channels = spec.channels as usize;
    let mut samples = Vec::new();
    let mut frame = Vec::with_capacity(channels);
    for s in reader.into_samples::<i16>() {
        let s = s.map_err(|e| format_err(path, e))?;
        frame.push(s as f64 / 32768.0);
        if frame.len() == channels {
            samples.push(frame.iter().sum::<f64>() / channels as f64);
            frame.clear();
        }
    }
    let source_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "unknown".to_string());
    Ok(Waveform {
        samples,
        sample_rate: spec.sample_rate,
        source_id,
    })
}

/// Writes mono 16-bit PCM; samples are clamped to [-1, 1] first.
pub fn write_wav(path: &Path, waveform: &Waveform) -> Result<(), AudioError> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: waveform.sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(|e| format_err(path, e))?;
    for &s in &waveform.samples {
        let v = (s.clamp(-1.0, 1.0) * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        writer.write_sample(v).map_err(|e| format_err(path, e))?;
    }
    writer.finalize().map_err(|e| format_err(path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn temp_path(name: &str) -> std::path::PathBuf {
        let mut p = std::env::temp_dir();
        p.push(format!("undiar-wav-test-{}-{name}", std::process::id()));
        p
    }

    #[test]
    fn scaling_matches_spec() {
        // 16-bit value 16384 -> 0.5
        let path = temp_path("scale.wav");
        let spec = hound::WavSpec {
            channels: 1,
            sample_rate: 8000,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let mut w = hound::WavWriter::create(&path, spec).unwrap();
        w.write_sample(16384i16).unwrap();
        w.finalize().unwrap();
        let wf = read_wav(&path, false).unwrap();
        assert_eq!(wf.samples, vec![0.5]);
        assert_eq!(wf.source_id.contains("scale"), true);
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn one_second_at_8khz_has_8000_samples() {
        let path = temp_path("len.wav");
        let wf = Waveform {
            samples: vec![0.1; 8000],
            sample_rate: 8000,
            source_id: "len".into(),
        };
        write_wav(&path, &wf).unwrap();
        let back = read_wav(&path, false).unwrap();
        assert_eq!(back.samples.len(), 8000);
        assert_eq!(back.sample_rate, 8000);
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn round_trip_within_quantization_bound() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let path = temp_path("roundtrip.wav");
        let samples: Vec<f64> = (0..4096).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let wf = Waveform {
            samples: samples.clone(),
            sample_rate: 16000,
            source_id: "rt".into(),
        };
        write_wav(&path, &wf).unwrap();
        let back = read_wav(&path, false).unwrap();
        for (a, b) in samples.iter().zip(&back.samples) {
            assert!((a - b).abs() <= 1.0 / 32768.0, "{a} vs {b}");
        }
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn stereo_needs_downmix_flag() {
        let path = temp_path("stereo.wav");
        let spec = hound::WavSpec {
            channels: 2,
            sample_rate: 8000,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let mut w = hound::WavWriter::create(&path, spec).unwrap();
        for _ in 0..100 {
            w.write_sample(8192i16).unwrap(); // left
            w.write_sample(-8192i16).unwrap(); // right
        }
        w.finalize().unwrap();
        assert!(matches!(
            read_wav(&path, false),
            Err(AudioError::Channels { channels: 2, .. })
        ));
        let mixed = read_wav(&path, true).unwrap();
        assert_eq!(mixed.samples.len(), 100);
        assert!(mixed.samples.iter().all(|s| s.abs() < 1e-12));
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn garbage_is_a_format_error() {
        let path = temp_path("garbage.wav");
        std::fs::write(&path, b"not a riff file at all").unwrap();
        assert!(matches!(
            read_wav(&path, false),
            Err(AudioError::Format { .. })
        ));
        std::fs::remove_file(&path).ok();
    }
}
