//! Component-ablation harness: runs the pipeline variants over a test set
//! and reports one DER row per variant.

use super::diarize::{diarize_embeddings, Stopping};
use super::PipelineError;
use crate::audio::{SpeechRegion, Waveform};
use crate::cluster::{ahc, cut_by_count, DistanceMatrix, Linkage};
use crate::encoder::{embed_file, Embedding, Model};
use crate::nncore::{parallel_map, Scalar};
use crate::plda::{PldaScorer, Preprocessor};
use crate::score::{der, DiarizationHypothesis, RttmRecord};
use std::collections::BTreeMap;

pub struct AblationInputs<'a, T: Scalar> {
    pub model: &'a Model<T>,
    /// Encoder trained with the alternative objective, when available.
    pub vicreg_model: Option<&'a Model<T>>,
    pub scorer: &'a PldaScorer,
    pub preprocessor: &'a Preprocessor,
    pub threshold: f64,
    pub reference: &'a [RttmRecord],
    /// Per file: waveform, energy-VAD regions, oracle-VAD regions.
    pub files: &'a [(Waveform, Vec<SpeechRegion>, Vec<SpeechRegion>)],
    pub hop_ms: f64,
    pub linkage: Linkage,
    pub collar: f64,
}

#[derive(Debug, Clone)]
pub struct AblationRow {
    pub name: String,
    pub der: f64,
    pub missed: f64,
    pub false_alarm: f64,
    pub confusion: f64,
}

#[derive(Debug, Clone, Default)]
pub struct AblationReport {
    pub rows: Vec<AblationRow>,
}

impl AblationReport {
    pub fn row(&self, name: &str) -> Option<&AblationRow> {
        self.rows.iter().find(|r| r.name == name)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("variant,der,missed,false_alarm,confusion\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{:.6},{:.6},{:.6},{:.6}\n",
                r.name, r.der, r.missed, r.false_alarm, r.confusion
            ));
        }
        out
    }
}

/// Names of the standard variants.
pub const RAW_COUNT: &str = "embeddings+clustering+count";
pub const PLDA_THRESHOLD: &str = "embeddings+plda+clustering";
pub const PLDA_COUNT: &str = "embeddings+plda+count";
pub const PLDA_ORACLE_VAD: &str = "embeddings+plda+clustering+oracle-vad";
pub const VICREG_COUNT: &str = "vicreg-embeddings+clustering+count";

/// Runs every requested variant and scores it against the reference.
pub fn ablation_run<T: Scalar>(inputs: &AblationInputs<'_, T>) -> Result<AblationReport, PipelineError> {
    // reference speaker counts per file, for the known-count variants
    let mut speakers_per_file: BTreeMap<&str, std::collections::BTreeSet<&str>> = BTreeMap::new();
    for r in inputs.reference {
        speakers_per_file
            .entry(r.file_id.as_str())
            .or_default()
            .insert(r.speaker.as_str());
    }
    let known_count =
        |file_id: &str| -> usize { speakers_per_file.get(file_id).map_or(1, |s| s.len().max(1)) };

    // embeddings per file for both VAD modes, computed once
    struct FileEmbeddings {
        file_id: String,
        energy: Vec<Embedding>,
        oracle: Vec<Embedding>,
        vicreg_energy: Option<Vec<Embedding>>,
    }
    let embedded: Vec<FileEmbeddings> = parallel_map(
        inputs.files.iter().collect(),
        |_, (w, energy_regions, oracle_regions)| {
            let energy = embed_file(inputs.model, w, energy_regions, inputs.hop_ms)?;
            let oracle = embed_file(inputs.model, w, oracle_regions, inputs.hop_ms)?;
            let vicreg_energy = match inputs.vicreg_model {
                Some(m) => Some(embed_file(m, w, energy_regions, inputs.hop_ms)?),
                None => None,
            };
            Ok::<_, crate::nncore::NnError>(FileEmbeddings {
                file_id: w.source_id.clone(),
                energy,
                oracle,
                vicreg_energy,
            })
        },
    )
    .into_iter()
    .collect::<Result<_, _>>()?;

    let mut report = AblationReport::default();

    // raw embeddings, squared-Euclidean clustering, known speaker count
    {
        let mut hyps = Vec::new();
        for fe in &embedded {
            hyps.push(raw_count_diarize(
                &fe.file_id,
                &fe.energy,
                known_count(&fe.file_id),
                inputs.hop_ms,
                inputs.linkage,
            )?);
        }
        report.rows.push(score_variant(RAW_COUNT, &hyps, inputs)?);
    }

    // plda + tuned threshold
    {
        let mut hyps = Vec::new();
        for fe in &embedded {
            hyps.push(diarize_embeddings(
                &fe.file_id,
                &fe.energy,
                inputs.scorer,
                inputs.preprocessor,
                Stopping::Threshold(inputs.threshold),
                inputs.hop_ms,
                inputs.linkage,
            )?);
        }
        report.rows.push(score_variant(PLDA_THRESHOLD, &hyps, inputs)?);
    }

    // plda + known count
    {
        let mut hyps = Vec::new();
        for fe in &embedded {
            hyps.push(diarize_embeddings(
                &fe.file_id,
                &fe.energy,
                inputs.scorer,
                inputs.preprocessor,
                Stopping::KnownCount(known_count(&fe.file_id)),
                inputs.hop_ms,
                inputs.linkage,
            )?);
        }
        report.rows.push(score_variant(PLDA_COUNT, &hyps, inputs)?);
    }

    // plda + threshold + oracle VAD
    {
        let mut hyps = Vec::new();
        for fe in &embedded {
            hyps.push(diarize_embeddings(
                &fe.file_id,
                &fe.oracle,
                inputs.scorer,
                inputs.preprocessor,
                Stopping::Threshold(inputs.threshold),
                inputs.hop_ms,
                inputs.linkage,
            )?);
        }
        report.rows.push(score_variant(PLDA_ORACLE_VAD, &hyps, inputs)?);
    }

    // alternative-objective encoder, raw clustering, known count
    if inputs.vicreg_model.is_some() {
        let mut hyps = Vec::new();
        for fe in &embedded {
            let embeddings = fe.vicreg_energy.as_ref().expect("computed above");
            hyps.push(raw_count_diarize(
                &fe.file_id,
                embeddings,
                known_count(&fe.file_id),
                inputs.hop_ms,
                inputs.linkage,
            )?);
        }
        report.rows.push(score_variant(VICREG_COUNT, &hyps, inputs)?);
    }

    Ok(report)
}

/// Clustering directly on embedding distances, cut at the known count.
fn raw_count_diarize(
    file_id: &str,
    embeddings: &[Embedding],
    count: usize,
    hop_ms: f64,
    linkage: Linkage,
) -> Result<DiarizationHypothesis, PipelineError> {
    let n = embeddings.len();
    let mut hypothesis = DiarizationHypothesis {
        file_id: file_id.to_string(),
        segments: Vec::new(),
    };
    if n == 0 {
        return Ok(hypothesis);
    }
    let labels = if n == 1 {
        vec![0usize]
    } else {
        let vectors: Vec<Vec<f64>> = embeddings.iter().map(|e| e.vector.clone()).collect();
        let d = DistanceMatrix::squared_euclidean(&vectors)?;
        let dendrogram = ahc(&d, linkage)?;
        cut_by_count(&dendrogram, count.clamp(1, n))?
    };
    let hop = hop_ms / 1000.0;
    let mut merged: Vec<(usize, f64, f64)> = Vec::new();
    for (e, &label) in embeddings.iter().zip(&labels) {
        let onset = e.center_time - hop / 2.0;
        let end = e.center_time + hop / 2.0;
        match merged.last_mut() {
            Some((last, _, last_end)) if *last == label && (onset - *last_end).abs() < 1e-9 => {
                *last_end = end;
            }
            _ => merged.push((label, onset, end)),
        }
    }
    hypothesis.segments = merged
        .into_iter()
        .map(|(label, onset, end)| (format!("spk{label}"), onset, end - onset))
        .collect();
    Ok(hypothesis)
}

fn score_variant<T: Scalar>(
    name: &str,
    hypotheses: &[DiarizationHypothesis],
    inputs: &AblationInputs<'_, T>,
) -> Result<AblationRow, PipelineError> {
    let records: Vec<RttmRecord> = hypotheses.iter().flat_map(|h| h.to_rttm("1")).collect();
    let report = der(inputs.reference, &records, inputs.collar, true)?;
    Ok(AblationRow {
        name: name.to_string(),
        der: report.der(),
        missed: report.missed,
        false_alarm: report.false_alarm,
        confusion: report.confusion,
    })
}
