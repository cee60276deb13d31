//! Energy-gate voice activity detection and oracle regions from reference
//! RTTM.

use super::{merge_regions, SpeechRegion, Waveform};
use crate::score::RttmRecord;

#[derive(Debug, Clone, Copy)]
pub struct VadParams {
    pub frame_ms: f64,
    pub hop_ms: f64,
    /// RMS threshold in dB relative to full scale.
    pub threshold_db: f64,
    pub min_speech_ms: f64,
    pub min_gap_ms: f64,
}

impl Default for VadParams {
    fn default() -> Self {
        VadParams {
            frame_ms: 30.0,
            hop_ms: 10.0,
            threshold_db: -40.0,
            min_speech_ms: 300.0,
            min_gap_ms: 300.0,
        }
    }
}

/// Frames whose RMS energy exceeds the threshold are speech. Each speech
/// frame claims a hop-wide span around its center; consecutive spans fuse,
/// gaps shorter than `min_gap_ms` merge, and regions shorter than
/// `min_speech_ms` are dropped.
pub fn energy_vad(w: &Waveform, params: &VadParams) -> Vec<SpeechRegion> {
    let rate = w.sample_rate as f64;
    let frame_len = (params.frame_ms / 1000.0 * rate).round() as usize;
    let hop_len = (params.hop_ms / 1000.0 * rate).round() as usize;
    if frame_len == 0 || hop_len == 0 || w.samples.len() < frame_len {
        return Vec::new();
    }
    let duration = w.duration();
    let hop_sec = hop_len as f64 / rate;
    let frame_sec = frame_len as f64 / rate;

    let mut regions: Vec<SpeechRegion> = Vec::new();
    let mut start = 0usize;
    while start + frame_len <= w.samples.len() {
        let frame = &w.samples[start..start + frame_len];
        let rms = (frame.iter().map(|s| s * s).sum::<f64>() / frame_len as f64).sqrt();
        let db = 20.0 * rms.max(1e-10).log10();
        if db > params.threshold_db {
            let center = start as f64 / rate + frame_sec / 2.0;
            let onset = (center - hop_sec / 2.0).max(0.0);
            let end = (center + hop_sec / 2.0).min(duration);
            regions.push(SpeechRegion {
                onset,
                duration: end - onset,
            });
        }
        start += hop_len;
    }

    let mut merged = merge_regions(regions);
    // close small gaps first, then drop short islands
    merged = close_gaps(merged, params.min_gap_ms / 1000.0);
    merged.retain(|r| r.duration * 1000.0 >= params.min_speech_ms);
    merged
}

fn close_gaps(regions: Vec<SpeechRegion>, min_gap: f64) -> Vec<SpeechRegion> {
    let mut out: Vec<SpeechRegion> = Vec::with_capacity(regions.len());
    for r in regions {
        match out.last_mut() {
            Some(last) if r.onset - last.end() < min_gap => {
                let end = last.end().max(r.end());
                last.duration = end - last.onset;
            }
            _ => out.push(r),
        }
    }
    out
}

/// Oracle speech regions: the union of all reference segments for one file.
/// Unknown file ids yield an empty list.
pub fn regions_from_rttm(records: &[RttmRecord], file_id: &str) -> Vec<SpeechRegion> {
    merge_regions(
        records
            .iter()
            .filter(|r| r.file_id == file_id)
            .map(|r| SpeechRegion {
                onset: r.onset,
                duration: r.duration,
            })
            .collect(),
    )
}
