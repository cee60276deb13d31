//! Self-generated pseudo-speaker labels.
//!
//! Per development file: embed, cluster the squared-Euclidean distances,
//! cut the dendrogram high (10 clusters by default), and keep the largest
//! cluster's embeddings as one fresh pseudo-speaker. One pseudo-speaker per
//! file, never shared across files.

use super::PipelineError;
use crate::audio::{SpeechRegion, Waveform};
use crate::cluster::{ahc, cut_by_count, largest_cluster, DistanceMatrix, Linkage};
use crate::encoder::{embed_file, Embedding, Model};
use crate::nncore::Scalar;

#[derive(Debug, Clone, Default)]
pub struct PseudoLabeledSet {
    pub vectors: Vec<Vec<f64>>,
    /// Pseudo-speaker id per vector.
    pub labels: Vec<usize>,
    /// Segment center time per vector (diagnostics and purity checks).
    pub vector_times: Vec<f64>,
    /// Source file of each pseudo-speaker, indexed by pseudo-speaker id.
    pub speaker_files: Vec<String>,
    /// Files skipped for having fewer than `k_cut` segments.
    pub skipped_files: Vec<String>,
}

impl PseudoLabeledSet {
    pub fn n_speakers(&self) -> usize {
        self.speaker_files.len()
    }

    /// Vector indices belonging to one pseudo-speaker, in insertion order.
    pub fn members(&self, speaker: usize) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == speaker)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Core labeling step on precomputed embeddings, one entry per file.
pub fn pseudo_labels_from_embeddings(
    per_file: &[(String, Vec<Embedding>)],
    k_cut: usize,
    linkage: Linkage,
) -> Result<PseudoLabeledSet, PipelineError> {
    let mut set = PseudoLabeledSet::default();
    for (file_id, embeddings) in per_file {
        if embeddings.len() < k_cut {
            set.skipped_files.push(file_id.clone());
            continue;
        }
        let vectors: Vec<Vec<f64>> = embeddings.iter().map(|e| e.vector.clone()).collect();
        let labels = if k_cut == embeddings.len() {
            // every segment its own cluster
            (0..embeddings.len()).collect()
        } else {
            let d = DistanceMatrix::squared_euclidean(&vectors)?;
            let dendrogram = ahc(&d, linkage)?;
            cut_by_count(&dendrogram, k_cut)?
        };
        let (_, members) = largest_cluster(&labels);
        let speaker = set.speaker_files.len();
        set.speaker_files.push(file_id.clone());
        for m in members {
            set.vectors.push(vectors[m].clone());
            set.labels.push(speaker);
            set.vector_times.push(embeddings[m].center_time);
        }
    }
    if set.speaker_files.is_empty() {
        return Err(PipelineError::NoEligibleFiles { need: k_cut });
    }
    Ok(set)
}

/// Embeds each development file and labels its largest cluster.
pub fn generate_pseudo_labels<T: Scalar>(
    model: &Model<T>,
    files: &[(Waveform, Vec<SpeechRegion>)],
    k_cut: usize,
    hop_ms: f64,
    linkage: Linkage,
) -> Result<PseudoLabeledSet, PipelineError> {
    let per_file: Vec<(String, Vec<Embedding>)> =
        crate::nncore::parallel_map(files.iter().collect(), |_, (w, regions)| {
            let embeddings = embed_file(model, w, regions, hop_ms)?;
            Ok::<_, crate::nncore::NnError>((w.source_id.clone(), embeddings))
        })
        .into_iter()
        .collect::<Result<_, _>>()?;
    pseudo_labels_from_embeddings(&per_file, k_cut, linkage)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn emb(v: &[f64]) -> Embedding {
        Embedding {
            vector: v.to_vec(),
            center_time: 0.0,
        }
    }

    #[test]
    fn one_pseudo_speaker_per_file_never_shared() {
        // two files with two tight clusters each; k_cut 2
        let file_a = (
            "a".to_string(),
            vec![
                emb(&[0.0, 0.0]),
                emb(&[0.1, 0.0]),
                emb(&[0.05, 0.02]),
                emb(&[5.0, 5.0]),
            ],
        );
        let file_b = (
            "b".to_string(),
            vec![emb(&[9.0, 9.0]), emb(&[9.1, 9.0]), emb(&[0.0, 1.0])],
        );
        let set = pseudo_labels_from_embeddings(&[file_a, file_b], 2, Linkage::Average).unwrap();
        assert_eq!(set.n_speakers(), 2);
        assert_eq!(set.speaker_files, vec!["a".to_string(), "b".to_string()]);
        // speaker 0 only from file a (the tight 3-cluster), speaker 1 from b
        assert_eq!(set.members(0).len(), 3);
        assert_eq!(set.members(1).len(), 2);
        for (v, &l) in set.vectors.iter().zip(&set.labels) {
            if l == 0 {
                assert!(v[0] < 1.0, "speaker 0 vectors come from file a: {v:?}");
            } else {
                assert!(v[0] > 8.0, "speaker 1 vectors come from file b: {v:?}");
            }
        }
    }

    #[test]
    fn k_cut_equal_to_segment_count_keeps_one_singleton() {
        let file = ("a".to_string(), vec![emb(&[0.0]), emb(&[1.0]), emb(&[2.0])]);
        let set = pseudo_labels_from_embeddings(&[file], 3, Linkage::Average).unwrap();
        assert_eq!(set.n_speakers(), 1);
        assert_eq!(set.vectors.len(), 1, "all-singleton cut keeps one vector");
    }

    #[test]
    fn short_files_are_skipped_and_all_short_errors() {
        let long = (
            "long".to_string(),
            (0..12).map(|i| emb(&[i as f64, 0.0])).collect::<Vec<_>>(),
        );
        let short = ("short".to_string(), vec![emb(&[0.0, 0.0])]);
        let set =
            pseudo_labels_from_embeddings(&[long, short.clone()], 10, Linkage::Average).unwrap();
        assert_eq!(set.n_speakers(), 1);
        assert_eq!(set.skipped_files, vec!["short".to_string()]);

        assert!(matches!(
            pseudo_labels_from_embeddings(&[short], 10, Linkage::Average),
            Err(PipelineError::NoEligibleFiles { need: 10 })
        ));
    }
}
