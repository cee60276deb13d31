//! Interval-arithmetic DER computation.
//!
//! Scored time per file is the reference timeline minus a collar around
//! every reference segment boundary and minus regions where two or more
//! reference speakers overlap (when overlap is ignored). Hypothesis
//! speakers are mapped onto reference speakers by an exact assignment
//! maximizing co-occurring time over the scored regions, then missed
//! speech, false alarm and speaker confusion accumulate per atomic
//! interval. The reported rate divides by reference speaker time inside
//! the scored regions, as the NIST scorer does.

use super::assignment::max_weight_assignment;
use super::{RttmRecord, ScoreError};
use std::collections::BTreeMap;

type Interval = (f64, f64);

#[derive(Debug, Clone, Default)]
pub struct FileDer {
    pub scored_time: f64,
    pub missed: f64,
    pub false_alarm: f64,
    pub confusion: f64,
}

impl FileDer {
    pub fn error_time(&self) -> f64 {
        self.missed + self.false_alarm + self.confusion
    }
}

#[derive(Debug, Clone, Default)]
pub struct DerReport {
    pub scored_time: f64,
    pub missed: f64,
    pub false_alarm: f64,
    pub confusion: f64,
    pub per_file: Vec<(String, FileDer)>,
}

impl DerReport {
    /// `(missed + false_alarm + confusion) / scored_time`, as a fraction.
    pub fn der(&self) -> f64 {
        let err = self.missed + self.false_alarm + self.confusion;
        if self.scored_time > 0.0 {
            err / self.scored_time
        } else if err > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    }

    pub fn confusion_rate(&self) -> f64 {
        if self.scored_time > 0.0 {
            self.confusion / self.scored_time
        } else {
            0.0
        }
    }

    fn add_file(&mut self, file_id: String, f: FileDer) {
        self.scored_time += f.scored_time;
        self.missed += f.missed;
        self.false_alarm += f.false_alarm;
        self.confusion += f.confusion;
        self.per_file.push((file_id, f));
    }
}

/// NIST-style DER with collar (seconds) around reference boundaries and
/// optional exclusion of reference-overlap regions.
///
/// Hypothesis files missing from the reference are an error; reference
/// files absent from the hypothesis score as pure missed speech.
pub fn der(
    reference: &[RttmRecord],
    hypothesis: &[RttmRecord],
    collar: f64,
    ignore_overlap: bool,
) -> Result<DerReport, ScoreError> {
    score(reference, hypothesis, collar, ignore_overlap, false)
}

/// Confusion-only protocol for oracle-VAD evaluation: scored time is
/// restricted to reference speech, so missed speech and false alarms are
/// structurally excluded and only speaker confusion remains meaningful.
pub fn speaker_confusion_only(
    reference: &[RttmRecord],
    hypothesis: &[RttmRecord],
    collar: f64,
    ignore_overlap: bool,
) -> Result<DerReport, ScoreError> {
    score(reference, hypothesis, collar, ignore_overlap, true)
}

fn score(
    reference: &[RttmRecord],
    hypothesis: &[RttmRecord],
    collar: f64,
    ignore_overlap: bool,
    restrict_to_ref_speech: bool,
) -> Result<DerReport, ScoreError> {
    // group by file, BTreeMap for deterministic file order
    let mut ref_files: BTreeMap<&str, Vec<&RttmRecord>> = BTreeMap::new();
    for r in reference {
        ref_files.entry(&r.file_id).or_default().push(r);
    }
    let mut hyp_files: BTreeMap<&str, Vec<&RttmRecord>> = BTreeMap::new();
    for h in hypothesis {
        if !ref_files.contains_key(h.file_id.as_str()) {
            return Err(ScoreError::UnknownFile(h.file_id.clone()));
        }
        hyp_files.entry(&h.file_id).or_default().push(h);
    }

    let mut report = DerReport::default();
    for (file_id, refs) in &ref_files {
        let hyps = hyp_files.get(file_id).map(|v| v.as_slice()).unwrap_or(&[]);
        let file = score_file(refs, hyps, collar, ignore_overlap, restrict_to_ref_speech);
        report.add_file(file_id.to_string(), file);
    }
    Ok(report)
}

fn score_file(
    refs: &[&RttmRecord],
    hyps: &[&RttmRecord],
    collar: f64,
    ignore_overlap: bool,
    restrict_to_ref_speech: bool,
) -> FileDer {
    // per-speaker unioned interval lists, speakers ordered by name
    let ref_speakers = speaker_intervals(refs);
    let hyp_speakers = speaker_intervals(hyps);

    let universe_end = ref_speakers
        .iter()
        .chain(hyp_speakers.iter())
        .flat_map(|(_, iv)| iv.iter().map(|i| i.1))
        .fold(0.0f64, f64::max);
    if universe_end <= 0.0 {
        return FileDer::default();
    }

    // excluded time: collars around every reference boundary, reference
    // overlap regions, and (for the confusion-only protocol) non-speech
    let mut excluded: Vec<Interval> = Vec::new();
    if collar > 0.0 {
        // around every reference segment boundary as given, before any
        // per-speaker merging
        for r in refs {
            excluded.push((r.onset - collar, r.onset + collar));
            excluded.push((r.onset + r.duration - collar, r.onset + r.duration + collar));
        }
    }
    if ignore_overlap {
        excluded.extend(overlap_regions(&ref_speakers));
    }
    if restrict_to_ref_speech {
        let speech = merge_intervals(
            ref_speakers
                .iter()
                .flat_map(|(_, iv)| iv.iter().copied())
                .collect(),
        );
        excluded.extend(complement(&speech, universe_end));
    }
    let scored = complement(&merge_intervals(excluded), universe_end);

    // atomic intervals: cut scored regions at every segment boundary
    let mut cuts: Vec<f64> = Vec::new();
    for (_, intervals) in ref_speakers.iter().chain(hyp_speakers.iter()) {
        for &(on, off) in intervals {
            cuts.push(on);
            cuts.push(off);
        }
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup();

    let mut atoms: Vec<(f64, Vec<usize>, Vec<usize>)> = Vec::new();
    for &(s0, s1) in &scored {
        let mut points = vec![s0];
        points.extend(cuts.iter().copied().filter(|&c| c > s0 && c < s1));
        points.push(s1);
        for w in points.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b - a <= 0.0 {
                continue;
            }
            let mid = 0.5 * (a + b);
            let active_ref: Vec<usize> = ref_speakers
                .iter()
                .enumerate()
                .filter(|(_, (_, iv))| covers(iv, mid))
                .map(|(i, _)| i)
                .collect();
            let active_hyp: Vec<usize> = hyp_speakers
                .iter()
                .enumerate()
                .filter(|(_, (_, iv))| covers(iv, mid))
                .map(|(i, _)| i)
                .collect();
            atoms.push((b - a, active_ref, active_hyp));
        }
    }

    // optimal speaker mapping by co-occurring time over scored regions
    let nr = ref_speakers.len();
    let nh = hyp_speakers.len();
    let mapping: Vec<Option<usize>> = if nr > 0 && nh > 0 {
        let mut profit = vec![vec![0.0f64; nh]; nr];
        for (len, ar, ah) in &atoms {
            for &r in ar {
                for &h in ah {
                    profit[r][h] += len;
                }
            }
        }
        max_weight_assignment(&profit)
    } else {
        vec![None; nr]
    };

    let mut file = FileDer::default();
    for (len, ar, ah) in &atoms {
        let n_ref = ar.len();
        let n_hyp = ah.len();
        let n_correct = ar
            .iter()
            .filter(|r| matches!(mapping[**r], Some(h) if ah.contains(&h)))
            .count();
        file.scored_time += n_ref as f64 * len;
        file.missed += n_ref.saturating_sub(n_hyp) as f64 * len;
        file.false_alarm += n_hyp.saturating_sub(n_ref) as f64 * len;
        file.confusion += (n_ref.min(n_hyp) - n_correct) as f64 * len;
    }
    file
}

/// `(speaker, merged sorted intervals)` ordered by speaker name.
fn speaker_intervals(records: &[&RttmRecord]) -> Vec<(String, Vec<Interval>)> {
    let mut by_speaker: BTreeMap<&str, Vec<Interval>> = BTreeMap::new();
    for r in records {
        by_speaker
            .entry(&r.speaker)
            .or_default()
            .push((r.onset, r.onset + r.duration));
    }
    by_speaker
        .into_iter()
        .map(|(name, iv)| (name.to_string(), merge_intervals(iv)))
        .collect()
}

/// Sorts and merges overlapping or touching intervals.
fn merge_intervals(mut intervals: Vec<Interval>) -> Vec<Interval> {
    intervals.retain(|&(a, b)| b > a);
    intervals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut out: Vec<Interval> = Vec::with_capacity(intervals.len());
    for (a, b) in intervals {
        match out.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => out.push((a, b)),
        }
    }
    out
}

/// `[0, end]` minus the (already merged) intervals.
fn complement(merged: &[Interval], end: f64) -> Vec<Interval> {
    let mut out = Vec::new();
    let mut cursor = 0.0f64;
    for &(a, b) in merged {
        if a > cursor {
            out.push((cursor, a.min(end)));
        }
        cursor = cursor.max(b);
        if cursor >= end {
            break;
        }
    }
    if cursor < end {
        out.push((cursor, end));
    }
    out
}

/// Regions where at least two (per-speaker merged) interval lists overlap.
fn overlap_regions(speakers: &[(String, Vec<Interval>)]) -> Vec<Interval> {
    let mut events: Vec<(f64, i32)> = Vec::new();
    for (_, intervals) in speakers {
        for &(a, b) in intervals {
            events.push((a, 1));
            events.push((b, -1));
        }
    }
    events.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut out = Vec::new();
    let mut depth = 0;
    let mut start = 0.0;
    for (t, delta) in events {
        let was = depth;
        depth += delta;
        if was < 2 && depth >= 2 {
            start = t;
        } else if was >= 2 && depth < 2 {
            out.push((start, t));
        }
    }
    merge_intervals(out)
}

fn covers(intervals: &[Interval], t: f64) -> bool {
    intervals.iter().any(|&(a, b)| a <= t && t < b)
}
