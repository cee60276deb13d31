//! `diarize`: end-to-end inference over a split (or one file), emitting
//! RTTM.

use super::{load_split, VadMode};
use crate::artifacts::{load_canonical, write_manifest, Artifacts};
use crate::config::RunConfig;
use anyhow::{anyhow, bail, Result};
use std::path::PathBuf;
use undiar_core::audio::{energy_vad, regions_from_rttm, SpeechRegion, Waveform};
use undiar_core::cluster::{ahc, cut_by_count, DistanceMatrix};
use undiar_core::encoder::embed_file;
use undiar_core::pipeline::{diarize, Stopping};
use undiar_core::score::{write_rttm, DiarizationHypothesis, RttmRecord};

/// Parsed `--stopping` argument.
#[derive(Debug, Clone, Copy)]
pub enum StoppingArg {
    ThresholdAuto,
    Threshold(f64),
    Count(usize),
}

impl std::str::FromStr for StoppingArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        if s == "threshold:auto" {
            return Ok(StoppingArg::ThresholdAuto);
        }
        if let Some(rest) = s.strip_prefix("threshold:") {
            return rest
                .parse()
                .map(StoppingArg::Threshold)
                .map_err(|_| format!("bad threshold {rest:?}"));
        }
        if let Some(rest) = s.strip_prefix("count:") {
            return rest
                .parse()
                .map(StoppingArg::Count)
                .map_err(|_| format!("bad count {rest:?}"));
        }
        Err(format!(
            "unknown stopping {s:?} (threshold:auto | threshold:<t> | count:<k>)"
        ))
    }
}

pub struct DiarizeArgs {
    pub split: Option<String>,
    pub input: Option<PathBuf>,
    pub vad: VadMode,
    pub stopping: StoppingArg,
    pub loss_name: String,
    pub out_tag: Option<String>,
}

pub fn run(cfg: &RunConfig, args: &DiarizeArgs) -> Result<()> {
    let seed = cfg.seed()?;
    let arts = Artifacts::new(cfg.path("artifact_dir")?);
    let model = arts.load_encoder(&args.loss_name)?;
    let hop = cfg.inference_hop_ms()?;
    let linkage = cfg.linkage()?;

    // PLDA artifacts are required unless clustering raw embeddings by count
    let plda = match arts.load_plda() {
        Ok(p) => Some(p),
        Err(e) => match args.stopping {
            StoppingArg::Count(_) => {
                eprintln!(
                    "diarize: no PLDA model, falling back to raw embedding distances ({e})"
                );
                None
            }
            _ => return Err(e),
        },
    };
    let stopping = match args.stopping {
        StoppingArg::ThresholdAuto => Stopping::Threshold(arts.load_threshold()?),
        StoppingArg::Threshold(t) => Stopping::Threshold(t),
        StoppingArg::Count(k) => {
            if k == 0 {
                bail!("count stopping needs k >= 1");
            }
            Stopping::KnownCount(k)
        }
    };

    // assemble (waveform, regions) inputs
    let files: Vec<(Waveform, Vec<SpeechRegion>)> = match (&args.split, &args.input) {
        (Some(split), None) => {
            let dir = cfg.path(super::synth_corpus::split_dir_key(split))?;
            load_split(cfg, &dir, args.vad)?
        }
        (None, Some(path)) => {
            let w = load_canonical(path)?;
            let regions = match args.vad {
                VadMode::Energy => energy_vad(&w, &cfg.vad()?),
                VadMode::Oracle => {
                    let dir = path
                        .parent()
                        .ok_or_else(|| anyhow!("input file has no parent directory"))?;
                    let reference = crate::artifacts::load_reference(dir)?;
                    regions_from_rttm(&reference, &w.source_id)
                }
            };
            vec![(w, regions)]
        }
        _ => bail!("pass exactly one of --split or --input"),
    };

    let mut records: Vec<RttmRecord> = Vec::new();
    let mut n_empty = 0usize;
    for (w, regions) in &files {
        let hypothesis = match &plda {
            Some((plda_model, pre)) => {
                let scorer = plda_model.scorer();
                diarize(&model, w, regions, &scorer, pre, stopping, hop, linkage)?
            }
            None => {
                let k = match stopping {
                    Stopping::KnownCount(k) => k,
                    Stopping::Threshold(_) => unreachable!("guarded above"),
                };
                raw_diarize(&model, w, regions, k, hop, linkage)?
            }
        };
        if hypothesis.is_empty() {
            n_empty += 1;
        }
        records.extend(hypothesis.to_rttm("1"));
    }

    let vad_name = match args.vad {
        VadMode::Energy => "energy",
        VadMode::Oracle => "oracle",
    };
    let tag = args.out_tag.clone().unwrap_or_else(|| {
        let base = args
            .split
            .clone()
            .or_else(|| {
                args.input
                    .as_ref()
                    .and_then(|p| p.file_stem().map(|s| s.to_string_lossy().into_owned()))
            })
            .unwrap_or_else(|| "out".into());
        format!("{base}-{vad_name}")
    });
    arts.dir("rttm")?;
    let out_path = arts.rttm_out(&tag);
    std::fs::write(&out_path, write_rttm(&records))?;
    write_manifest(&out_path, "diarize", seed, &cfg.snapshot(), &[])?;
    eprintln!(
        "diarize: {} files ({n_empty} without speech), {} segments -> {}",
        files.len(),
        records.len(),
        out_path.display()
    );
    Ok(())
}

/// Raw-embedding fallback: squared-Euclidean clustering cut by count.
fn raw_diarize(
    model: &undiar_core::encoder::Model<f32>,
    w: &Waveform,
    regions: &[SpeechRegion],
    count: usize,
    hop_ms: f64,
    linkage: undiar_core::cluster::Linkage,
) -> Result<DiarizationHypothesis> {
    let embeddings = embed_file(model, w, regions, hop_ms)?;
    let n = embeddings.len();
    let mut hypothesis = DiarizationHypothesis {
        file_id: w.source_id.clone(),
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
        cut_by_count(&ahc(&d, linkage)?, count.clamp(1, n))?
    };
    let hop = hop_ms / 1000.0;
    let mut merged: Vec<(usize, f64, f64)> = Vec::new();
    for (e, &label) in embeddings.iter().zip(&labels) {
        let onset = e.center_time - hop / 2.0;
        let end = e.center_time + hop / 2.0;
        match merged.last_mut() {
            Some((l, _, last_end)) if *l == label && (onset - *last_end).abs() < 1e-9 => {
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
