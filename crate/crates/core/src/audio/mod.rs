//! Audio ingestion, resampling, voice activity detection, fixed-length
//! segmentation, and synthetic corpus generation.
//!
//! Everything downstream assumes mono audio at the canonical internal rate
//! of 16 kHz; [`read_wav`] plus [`resample`] get arbitrary PCM16 inputs
//! there.

pub mod fft;
mod resample;
mod segment;
mod synth;
mod vad;
mod wav;

pub use resample::resample;
pub use segment::{extract_segments, Segment};
pub use synth::{generate_synthetic_corpus, ConversationSpec};
pub use vad::{energy_vad, regions_from_rttm, VadParams};
pub use wav::{read_wav, write_wav};

use thiserror::Error;

/// Canonical internal sample rate; the encoder's conv stack needs 500 ms
/// segments to span 8000 samples.
pub const CANONICAL_RATE: u32 = 16_000;

#[derive(Debug, Error)]
pub enum AudioError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed wav {path}: {detail}")]
    Format { path: String, detail: String },
    #[error("{path} has {channels} channels; pass downmix to average them")]
    Channels { path: String, channels: u16 },
}

/// Mono sampled audio.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    /// Samples in [-1, 1].
    pub samples: Vec<f64>,
    pub sample_rate: u32,
    /// File identifier (filename stem for real files).
    pub source_id: String,
}

impl Waveform {
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

/// A detected or reference speech stretch, in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeechRegion {
    pub onset: f64,
    pub duration: f64,
}

impl SpeechRegion {
    pub fn end(&self) -> f64 {
        self.onset + self.duration
    }
}

/// Merges overlapping or touching regions and sorts by onset.
pub(crate) fn merge_regions(mut regions: Vec<SpeechRegion>) -> Vec<SpeechRegion> {
    regions.retain(|r| r.duration > 0.0);
    regions.sort_by(|a, b| a.onset.partial_cmp(&b.onset).unwrap());
    let mut out: Vec<SpeechRegion> = Vec::with_capacity(regions.len());
    for r in regions {
        match out.last_mut() {
            Some(last) if r.onset <= last.end() => {
                let end = last.end().max(r.end());
                last.duration = end - last.onset;
            }
            _ => out.push(r),
        }
    }
    out
}
