//! Unsupervised stopping-threshold tuning.
//!
//! Synthetic multi-speaker utterances are assembled by concatenating runs
//! of consecutive pseudo-speaker vectors, the same similarity/row-distance
//! clustering used at inference runs over a threshold grid, and the grid
//! point with the lowest aggregate DER against the known pseudo-labels
//! wins. Each synthetic segment counts as one fixed-length slab, so DER at
//! collar 0 reduces to optimally-mapped label disagreement over slabs.

use super::pseudo::PseudoLabeledSet;
use super::similarity::{build_similarity, row_distance};
use super::PipelineError;
use crate::cluster::{ahc, cut_by_threshold, Dendrogram, Linkage};
use crate::nncore::parallel_map;
use crate::plda::{PldaScorer, Preprocessor};
use crate::score::max_weight_assignment;
use rand::Rng;

#[derive(Debug, Clone)]
pub struct TuningParams {
    pub n_utterances: usize,
    /// Consecutive vectors taken per draw ("10 frames").
    pub segs_per_draw: usize,
    /// Inclusive range of speakers per synthetic utterance.
    pub speakers_per_utterance: (usize, usize),
    /// Target utterance length in segments. Row-representation distances
    /// grow with utterance length, so tuning utterances are sized like the
    /// files the threshold will be applied to; the speaker count then
    /// decides the number of alternation rounds.
    pub target_segments: usize,
    pub grid_size: usize,
    /// Utterances used to find the grid's height range.
    pub grid_subsample: usize,
    pub linkage: Linkage,
}

impl Default for TuningParams {
    fn default() -> Self {
        TuningParams {
            n_utterances: 20_000,
            segs_per_draw: 10,
            speakers_per_utterance: (2, 4),
            target_segments: 160,
            grid_size: 200,
            grid_subsample: 500,
            linkage: Linkage::Average,
        }
    }
}

/// One synthetic tuning utterance: vector sequence plus true labels.
#[derive(Debug, Clone)]
pub struct TuningUtterance {
    pub vectors: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

/// Draws alternating runs of consecutive vectors from randomly chosen
/// pseudo-speakers (with replacement across draws; runs wrap around the
/// speaker's member list).
pub fn synthesize_tuning_utterances(
    pseudo: &PseudoLabeledSet,
    params: &TuningParams,
    rng: &mut impl Rng,
) -> Result<Vec<TuningUtterance>, PipelineError> {
    let n_speakers = pseudo.n_speakers();
    if n_speakers < 2 {
        return Err(PipelineError::Invalid(format!(
            "tuning needs at least 2 pseudo-speakers, got {n_speakers}"
        )));
    }
    let members: Vec<Vec<usize>> = (0..n_speakers).map(|s| pseudo.members(s)).collect();
    let lo = params.speakers_per_utterance.0.max(2);
    let hi = params.speakers_per_utterance.1.min(n_speakers).max(lo);

    let mut utterances = Vec::with_capacity(params.n_utterances);
    for _ in 0..params.n_utterances {
        let k = rng.gen_range(lo..=hi);
        // choose k distinct speakers
        let mut chosen = Vec::with_capacity(k);
        while chosen.len() < k {
            let s = rng.gen_range(0..n_speakers);
            if !chosen.contains(&s) {
                chosen.push(s);
            }
        }
        let rounds = (params.target_segments as f64 / (k * params.segs_per_draw) as f64)
            .round()
            .max(1.0) as usize;
        let mut vectors = Vec::with_capacity(k * rounds * params.segs_per_draw);
        let mut labels = Vec::with_capacity(vectors.capacity());
        for _ in 0..rounds {
            for &speaker in &chosen {
                let pool = &members[speaker];
                let start = rng.gen_range(0..pool.len());
                for j in 0..params.segs_per_draw {
                    let idx = pool[(start + j) % pool.len()];
                    vectors.push(pseudo.vectors[idx].clone());
                    labels.push(speaker);
                }
            }
        }
        utterances.push(TuningUtterance { vectors, labels });
    }
    Ok(utterances)
}

#[derive(Debug, Clone)]
pub struct ThresholdResult {
    pub threshold: f64,
    /// (threshold, aggregate DER over the tuning utterances).
    pub dev_der_curve: Vec<(f64, f64)>,
    pub n_utterances: usize,
}

/// Sweeps a data-driven threshold grid and picks the DER argmin (ties go to
/// the smaller threshold).
pub fn tune_threshold(
    utterances: &[TuningUtterance],
    scorer: &PldaScorer,
    preprocessor: &Preprocessor,
    params: &TuningParams,
) -> Result<ThresholdResult, PipelineError> {
    if params.grid_size == 0 {
        return Err(PipelineError::EmptyGrid);
    }
    if utterances.is_empty() {
        return Err(PipelineError::Invalid("no tuning utterances".into()));
    }

    // dendrogram per utterance (the expensive part), in parallel
    let dendrograms: Vec<Dendrogram> =
        parallel_map(utterances.iter().collect(), |_, utt| {
            let sim = build_similarity(&utt.vectors, scorer, preprocessor)?;
            let d = row_distance(&sim);
            Ok::<_, PipelineError>(ahc(&d, params.linkage)?)
        })
        .into_iter()
        .collect::<Result<_, _>>()?;

    // grid from the observed merge-height range on a subsample
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for dend in dendrograms.iter().take(params.grid_subsample) {
        lo = lo.min(dend.min_height());
        hi = hi.max(dend.max_height());
    }
    if !lo.is_finite() || !hi.is_finite() {
        return Err(PipelineError::Invalid("degenerate merge heights".into()));
    }
    let grid: Vec<f64> = if params.grid_size == 1 || hi <= lo {
        vec![lo]
    } else {
        (0..params.grid_size)
            .map(|i| lo + (hi - lo) * i as f64 / (params.grid_size - 1) as f64)
            .collect()
    };

    // per utterance and threshold: error slabs and total slabs
    let per_utt: Vec<Vec<(f64, f64)>> = parallel_map(
        dendrograms.iter().zip(utterances.iter()).collect(),
        |_, (dend, utt)| {
            grid.iter()
                .map(|&t| {
                    let hyp = cut_by_threshold(dend, t);
                    slab_der_components(&utt.labels, &hyp)
                })
                .collect()
        },
    );

    let mut curve = Vec::with_capacity(grid.len());
    for (gi, &t) in grid.iter().enumerate() {
        let mut err = 0.0;
        let mut total = 0.0;
        for utt in &per_utt {
            err += utt[gi].0;
            total += utt[gi].1;
        }
        curve.push((t, err / total));
    }

    let mut best = 0usize;
    for (i, &(_, der)) in curve.iter().enumerate() {
        if der < curve[best].1 {
            best = i;
        }
    }
    Ok(ThresholdResult {
        threshold: curve[best].0,
        dev_der_curve: curve,
        n_utterances: utterances.len(),
    })
}

/// DER of back-to-back equal-length slabs at collar 0: no miss or false
/// alarm is possible, so the error is the optimally-mapped label
/// disagreement. Returns (error slabs, total slabs).
fn slab_der_components(reference: &[usize], hypothesis: &[usize]) -> (f64, f64) {
    debug_assert_eq!(reference.len(), hypothesis.len());
    let n = reference.len();
    let n_ref = reference.iter().copied().max().map_or(0, |m| m + 1);
    let n_hyp = hypothesis.iter().copied().max().map_or(0, |m| m + 1);
    let mut overlap = vec![vec![0.0f64; n_hyp]; n_ref];
    for (&r, &h) in reference.iter().zip(hypothesis) {
        overlap[r][h] += 1.0;
    }
    let mapping = max_weight_assignment(&overlap);
    let correct: f64 = mapping
        .iter()
        .enumerate()
        .filter_map(|(r, h)| h.map(|h| overlap[r][h]))
        .sum();
    (n as f64 - correct, n as f64)
}
