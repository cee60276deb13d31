//! RTTM parsing/writing and NIST-style diarization error rate scoring with
//! collar and overlap exclusion.

mod assignment;
mod der;
mod rttm;

pub use assignment::max_weight_assignment;
pub use der::{der, speaker_confusion_only, DerReport, FileDer};
pub use rttm::{parse_rttm, write_rttm, RttmRecord};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error("rttm parse error at line {line}: {detail}")]
    Parse { line: usize, detail: String },
    #[error("hypothesis file {0:?} does not appear in the reference")]
    UnknownFile(String),
}

/// Per-file diarization output: speaker-labeled time intervals.
#[derive(Debug, Clone, Default)]
pub struct DiarizationHypothesis {
    pub file_id: String,
    /// (speaker label, onset seconds, duration seconds); per-speaker
    /// intervals are non-overlapping and sorted.
    pub segments: Vec<(String, f64, f64)>,
}

impl DiarizationHypothesis {
    pub fn to_rttm(&self, channel: &str) -> Vec<RttmRecord> {
        self.segments
            .iter()
            .map(|(speaker, onset, duration)| RttmRecord {
                file_id: self.file_id.clone(),
                channel: channel.to_string(),
                onset: *onset,
                duration: *duration,
                speaker: speaker.clone(),
            })
            .collect()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }
}
