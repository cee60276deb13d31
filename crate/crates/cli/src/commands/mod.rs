//! One module per pipeline stage.

pub mod ablate;
pub mod diarize;
pub mod embed;
pub mod pseudo_label;
pub mod score;
pub mod synth_corpus;
pub mod train_encoder;
pub mod train_plda;
pub mod tune_threshold;

use crate::artifacts::load_canonical;
use crate::config::RunConfig;
use anyhow::Result;
use std::path::Path;
use undiar_core::audio::{energy_vad, regions_from_rttm, SpeechRegion, Waveform};
use undiar_core::score::RttmRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VadMode {
    Energy,
    Oracle,
}

impl std::str::FromStr for VadMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "energy" => Ok(VadMode::Energy),
            "oracle" => Ok(VadMode::Oracle),
            other => Err(format!("unknown vad mode {other:?} (energy|oracle)")),
        }
    }
}

/// Loads a split directory's wavs at the canonical rate plus speech regions
/// under the chosen VAD. Oracle mode needs `reference.rttm` in the dir.
pub fn load_split(
    cfg: &RunConfig,
    dir: &Path,
    mode: VadMode,
) -> Result<Vec<(Waveform, Vec<SpeechRegion>)>> {
    let reference: Option<Vec<RttmRecord>> = match mode {
        VadMode::Oracle => Some(crate::artifacts::load_reference(dir)?),
        VadMode::Energy => None,
    };
    let vad = cfg.vad()?;
    let wavs = crate::artifacts::list_wavs(dir)?;
    let mut out = Vec::with_capacity(wavs.len());
    for path in wavs {
        let w = load_canonical(&path)?;
        let regions = match &reference {
            Some(records) => regions_from_rttm(records, &w.source_id),
            None => energy_vad(&w, &vad),
        };
        out.push((w, regions));
    }
    Ok(out)
}
