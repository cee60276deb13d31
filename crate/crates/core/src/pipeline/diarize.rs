//! End-to-end diarization of a single file.

use super::similarity::{build_similarity, row_distance};
use super::PipelineError;
use crate::audio::{SpeechRegion, Waveform};
use crate::cluster::{ahc, cut_by_count, cut_by_threshold, Linkage};
use crate::encoder::{embed_file, Embedding, Model};
use crate::nncore::Scalar;
use crate::plda::{PldaScorer, Preprocessor};
use crate::score::DiarizationHypothesis;

/// Clustering stopping rule.
#[derive(Debug, Clone, Copy)]
pub enum Stopping {
    Threshold(f64),
    KnownCount(usize),
}

/// VAD regions to segments to embeddings to PLDA row-distance clustering to
/// speaker-labeled time intervals.
pub fn diarize<T: Scalar>(
    model: &Model<T>,
    waveform: &Waveform,
    regions: &[SpeechRegion],
    scorer: &PldaScorer,
    preprocessor: &Preprocessor,
    stopping: Stopping,
    hop_ms: f64,
    linkage: Linkage,
) -> Result<DiarizationHypothesis, PipelineError> {
    let embeddings = embed_file(model, waveform, regions, hop_ms)?;
    diarize_embeddings(
        &waveform.source_id,
        &embeddings,
        scorer,
        preprocessor,
        stopping,
        hop_ms,
        linkage,
    )
}

/// The clustering and time-attribution core, reusable on precomputed
/// embeddings. Each segment claims a hop-wide slab around its center;
/// adjacent same-speaker slabs merge.
pub fn diarize_embeddings(
    file_id: &str,
    embeddings: &[Embedding],
    scorer: &PldaScorer,
    preprocessor: &Preprocessor,
    stopping: Stopping,
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
        let sim = build_similarity(&vectors, scorer, preprocessor)?;
        let dist = row_distance(&sim);
        let dendrogram = ahc(&dist, linkage)?;
        match stopping {
            Stopping::Threshold(t) => cut_by_threshold(&dendrogram, t),
            Stopping::KnownCount(k) => cut_by_count(&dendrogram, k.clamp(1, n))?,
        }
    };

    let hop = hop_ms / 1000.0;
    // slabs are ordered by time because embeddings are; merge adjacent
    // same-speaker slabs that touch
    let mut merged: Vec<(usize, f64, f64)> = Vec::new();
    for (e, &label) in embeddings.iter().zip(&labels) {
        let onset = e.center_time - hop / 2.0;
        let end = e.center_time + hop / 2.0;
        match merged.last_mut() {
            Some((last_label, _, last_end))
                if *last_label == label && (onset - *last_end).abs() < 1e-9 =>
            {
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plda::{Mat, PldaModel};

    fn identity_scoring(dim: usize) -> (PldaScorer, Preprocessor) {
        let mut phi_b = Mat::zeros(dim, dim);
        for i in 0..dim {
            phi_b.set(i, i, 1.0);
        }
        let model = PldaModel {
            mu: vec![0.0; dim],
            phi_b,
            phi_w: Mat::identity(dim),
        };
        let pre = Preprocessor {
            mean: vec![0.0; dim],
            whitening: Mat::identity(dim),
            projection: None,
            length_normalize: false,
        };
        (model.scorer(), pre)
    }

    fn emb(v: &[f64], t: f64) -> Embedding {
        Embedding {
            vector: v.to_vec(),
            center_time: t,
        }
    }

    #[test]
    fn empty_input_gives_empty_hypothesis() {
        let (scorer, pre) = identity_scoring(2);
        let h = diarize_embeddings(
            "f",
            &[],
            &scorer,
            &pre,
            Stopping::Threshold(1.0),
            250.0,
            Linkage::Average,
        )
        .unwrap();
        assert!(h.is_empty());
    }

    #[test]
    fn single_speaker_region_with_high_threshold_is_one_speaker() {
        let (scorer, pre) = identity_scoring(2);
        // contiguous segments every 250 ms, all near-identical vectors
        let embeddings: Vec<Embedding> = (0..8)
            .map(|i| emb(&[1.0 + 1e-6 * i as f64, 0.0], 0.25 + 0.25 * i as f64))
            .collect();
        let h = diarize_embeddings(
            "f",
            &embeddings,
            &scorer,
            &pre,
            Stopping::Threshold(f64::MAX),
            250.0,
            Linkage::Average,
        )
        .unwrap();
        assert_eq!(h.segments.len(), 1, "{:?}", h.segments);
        let (_, onset, duration) = &h.segments[0];
        assert!((onset - 0.125).abs() < 1e-9);
        assert!((duration - 2.0).abs() < 1e-9, "eight abutting 250 ms slabs");
    }

    #[test]
    fn known_count_equal_to_segments_gives_singletons() {
        let (scorer, pre) = identity_scoring(2);
        let embeddings: Vec<Embedding> = (0..5)
            .map(|i| emb(&[i as f64, -(i as f64)], 0.25 + 0.25 * i as f64))
            .collect();
        let h = diarize_embeddings(
            "f",
            &embeddings,
            &scorer,
            &pre,
            Stopping::KnownCount(5),
            250.0,
            Linkage::Average,
        )
        .unwrap();
        assert_eq!(h.segments.len(), 5, "each segment its own speaker");
        let speakers: std::collections::BTreeSet<&str> =
            h.segments.iter().map(|(s, _, _)| s.as_str()).collect();
        assert_eq!(speakers.len(), 5);
    }

    #[test]
    fn per_speaker_intervals_sorted_and_disjoint() {
        let (scorer, pre) = identity_scoring(1);
        // alternating far-apart vectors -> two speakers interleaved
        let embeddings: Vec<Embedding> = (0..10)
            .map(|i| {
                let v = if i % 2 == 0 { 5.0 } else { -5.0 };
                emb(&[v], 0.25 + 0.25 * i as f64)
            })
            .collect();
        let h = diarize_embeddings(
            "f",
            &embeddings,
            &scorer,
            &pre,
            Stopping::KnownCount(2),
            250.0,
            Linkage::Average,
        )
        .unwrap();
        let mut per_speaker: std::collections::BTreeMap<&str, Vec<(f64, f64)>> = Default::default();
        for (s, on, dur) in &h.segments {
            per_speaker.entry(s).or_default().push((*on, *on + *dur));
        }
        assert_eq!(per_speaker.len(), 2);
        for intervals in per_speaker.values() {
            for pair in intervals.windows(2) {
                assert!(pair[0].1 <= pair[1].0 + 1e-12);
            }
        }
    }
}
