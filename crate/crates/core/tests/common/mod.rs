//! Shared helpers for the integration suites: the central finite-difference
//! gradient oracle and the acceptance pass/fail reporter.

use rand::Rng;

/// Runs one acceptance criterion and prints a single pass/fail line.
#[allow(dead_code)]
pub fn criterion<F>(id: &str, desc: &str, f: F)
where
    F: FnOnce() + std::panic::UnwindSafe,
{
    match std::panic::catch_unwind(f) {
        Ok(()) => println!("ACCEPTANCE {id} {desc}: PASS"),
        Err(e) => {
            println!("ACCEPTANCE {id} {desc}: FAIL");
            std::panic::resume_unwind(e);
        }
    }
}

/// Central finite difference of `f` at `x`, over `indices` only.
#[allow(dead_code)]
pub fn finite_diff(
    x: &[f64],
    indices: &[usize],
    h: f64,
    mut f: impl FnMut(&[f64]) -> f64,
) -> Vec<f64> {
    let mut xp = x.to_vec();
    indices
        .iter()
        .map(|&i| {
            let orig = xp[i];
            xp[i] = orig + h;
            let fp = f(&xp);
            xp[i] = orig - h;
            let fm = f(&xp);
            xp[i] = orig;
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

/// Relative error with a small floor so near-zero gradients are judged on
/// absolute error.
#[allow(dead_code)]
pub fn rel_err(analytic: f64, fd: f64) -> f64 {
    (analytic - fd).abs() / (analytic.abs() + fd.abs()).max(1e-2)
}

/// Compares sampled analytic gradient entries against the FD oracle.
#[allow(dead_code)]
pub fn assert_grads_match(
    label: &str,
    x: &[f64],
    analytic: &[f64],
    tol: f64,
    f: impl FnMut(&[f64]) -> f64,
    rng: &mut impl Rng,
) {
    assert_eq!(x.len(), analytic.len(), "{label}: gradient length");
    let n_check = x.len().min(24);
    let mut indices: Vec<usize> = (0..x.len()).collect();
    // sample without replacement
    for i in 0..n_check {
        let j = rng.gen_range(i..indices.len());
        indices.swap(i, j);
    }
    indices.truncate(n_check);
    let fd = finite_diff(x, &indices, 1e-5, f);
    for (&i, &fdg) in indices.iter().zip(fd.iter()) {
        let err = rel_err(analytic[i], fdg);
        assert!(
            err < tol,
            "{label}: grad[{i}] analytic {} vs fd {} (rel err {err:.3e})",
            analytic[i],
            fdg
        );
    }
}

/// Naive O(n^3) agglomerative clustering reference: every step recomputes
/// each cluster-pair linkage directly from the member lists and the original
/// matrix. Independent of the Lance-Williams implementation it checks.
#[allow(dead_code)]
pub mod ahc_oracle {
    use undiar_core::cluster::{Dendrogram, DistanceMatrix, Linkage, Merge};

    pub fn naive_ahc(d: &DistanceMatrix, linkage: Linkage) -> Dendrogram {
        let n = d.len();
        // (cluster id, member leaves)
        let mut clusters: Vec<(usize, Vec<usize>)> = (0..n).map(|i| (i, vec![i])).collect();
        let mut merges = Vec::with_capacity(n - 1);
        for step in 0..n - 1 {
            let mut best: Option<(f64, usize, usize, usize, usize)> = None;
            for ci in 0..clusters.len() {
                for cj in (ci + 1)..clusters.len() {
                    let dist = cluster_linkage(d, &clusters[ci].1, &clusters[cj].1, linkage);
                    let (lo, hi) = if clusters[ci].0 < clusters[cj].0 {
                        (clusters[ci].0, clusters[cj].0)
                    } else {
                        (clusters[cj].0, clusters[ci].0)
                    };
                    let better = match best {
                        None => true,
                        Some(cur) => (dist, lo, hi) < (cur.0, cur.1, cur.2),
                    };
                    if better {
                        best = Some((dist, lo, hi, ci, cj));
                    }
                }
            }
            let (height, lo, hi, ci, cj) = best.unwrap();
            let (_, members_j) = clusters.remove(cj);
            let entry = &mut clusters[ci];
            entry.1.extend(members_j);
            entry.1.sort_unstable();
            entry.0 = n + step;
            merges.push(Merge {
                a: lo,
                b: hi,
                height,
                size: entry.1.len(),
            });
        }
        Dendrogram { n, merges }
    }

    fn cluster_linkage(
        d: &DistanceMatrix,
        a: &[usize],
        b: &[usize],
        linkage: Linkage,
    ) -> f64 {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        let mut sum = 0.0;
        for &i in a {
            for &j in b {
                let v = d.get(i, j);
                min = min.min(v);
                max = max.max(v);
                sum += v;
            }
        }
        match linkage {
            Linkage::Single => min,
            Linkage::Complete => max,
            Linkage::Average => sum / (a.len() * b.len()) as f64,
        }
    }
}

/// Random symmetric non-negative distance matrix with zero diagonal.
#[allow(dead_code)]
pub fn random_distance_matrix(
    rng: &mut impl Rng,
    n: usize,
) -> undiar_core::cluster::DistanceMatrix {
    undiar_core::cluster::DistanceMatrix::from_fn(n, |_, _| rng.gen_range(0.01..10.0)).unwrap()
}

/// Brute-force frame-level DER oracle: 10 ms frames judged at their
/// centers, exhaustive search over speaker mappings. Entirely independent
/// of the interval-arithmetic scorer.
#[allow(dead_code)]
pub mod der_oracle {
    use std::collections::BTreeMap;
    use undiar_core::score::RttmRecord;

    const FRAME: f64 = 0.01;

    pub struct OracleDer {
        pub scored_time: f64,
        pub missed: f64,
        pub false_alarm: f64,
        pub confusion: f64,
    }

    impl OracleDer {
        pub fn der(&self) -> f64 {
            if self.scored_time > 0.0 {
                (self.missed + self.false_alarm + self.confusion) / self.scored_time
            } else {
                0.0
            }
        }
    }

    pub fn frame_der(
        reference: &[RttmRecord],
        hypothesis: &[RttmRecord],
        collar: f64,
        ignore_overlap: bool,
    ) -> OracleDer {
        let mut ref_files: BTreeMap<&str, Vec<&RttmRecord>> = BTreeMap::new();
        for r in reference {
            ref_files.entry(&r.file_id).or_default().push(r);
        }
        let mut hyp_files: BTreeMap<&str, Vec<&RttmRecord>> = BTreeMap::new();
        for h in hypothesis {
            hyp_files.entry(&h.file_id).or_default().push(h);
        }

        let mut total = OracleDer {
            scored_time: 0.0,
            missed: 0.0,
            false_alarm: 0.0,
            confusion: 0.0,
        };
        for (file, refs) in &ref_files {
            let hyps = hyp_files.get(file).map(|v| v.as_slice()).unwrap_or(&[]);
            file_der(refs, hyps, collar, ignore_overlap, &mut total);
        }
        total
    }

    fn speakers(records: &[&RttmRecord]) -> Vec<String> {
        let mut names: Vec<String> = records.iter().map(|r| r.speaker.clone()).collect();
        names.sort();
        names.dedup();
        names
    }

    fn active(records: &[&RttmRecord], speaker: &str, t: f64) -> bool {
        records
            .iter()
            .any(|r| r.speaker == speaker && r.onset <= t && t < r.onset + r.duration)
    }

    fn file_der(
        refs: &[&RttmRecord],
        hyps: &[&RttmRecord],
        collar: f64,
        ignore_overlap: bool,
        total: &mut OracleDer,
    ) {
        let end = refs
            .iter()
            .chain(hyps.iter())
            .map(|r| r.onset + r.duration)
            .fold(0.0f64, f64::max);
        let n_frames = (end / FRAME).ceil() as usize;
        let ref_names = speakers(refs);
        let hyp_names = speakers(hyps);

        // first pass: frame classification + mapping profits
        let mut profit = vec![vec![0.0f64; hyp_names.len()]; ref_names.len()];
        let mut frames = Vec::with_capacity(n_frames);
        'frames: for i in 0..n_frames {
            let t = (i as f64 + 0.5) * FRAME;
            for r in refs {
                for b in [r.onset, r.onset + r.duration] {
                    if (t - b).abs() <= collar {
                        continue 'frames;
                    }
                }
            }
            let ar: Vec<usize> = (0..ref_names.len())
                .filter(|&k| active(refs, &ref_names[k], t))
                .collect();
            if ignore_overlap && ar.len() >= 2 {
                continue;
            }
            let ah: Vec<usize> = (0..hyp_names.len())
                .filter(|&k| active(hyps, &hyp_names[k], t))
                .collect();
            for &r in &ar {
                for &h in &ah {
                    profit[r][h] += FRAME;
                }
            }
            frames.push((ar, ah));
        }

        // exhaustive best one-to-one mapping of reference to hypothesis
        let mapping = best_mapping(&profit, hyp_names.len());

        for (ar, ah) in frames {
            let n_ref = ar.len();
            let n_hyp = ah.len();
            let n_correct = ar
                .iter()
                .filter(|r| matches!(mapping[**r], Some(h) if ah.contains(&h)))
                .count();
            total.scored_time += n_ref as f64 * FRAME;
            total.missed += n_ref.saturating_sub(n_hyp) as f64 * FRAME;
            total.false_alarm += n_hyp.saturating_sub(n_ref) as f64 * FRAME;
            total.confusion += (n_ref.min(n_hyp) - n_correct) as f64 * FRAME;
        }
    }

    fn best_mapping(profit: &[Vec<f64>], n_hyp: usize) -> Vec<Option<usize>> {
        let n_ref = profit.len();
        let mut best = vec![None; n_ref];
        let mut best_total = f64::NEG_INFINITY;
        let mut current = vec![None; n_ref];
        let mut used = vec![false; n_hyp];
        search(profit, 0, &mut current, &mut used, 0.0, &mut best, &mut best_total);
        best
    }

    fn search(
        profit: &[Vec<f64>],
        row: usize,
        current: &mut Vec<Option<usize>>,
        used: &mut Vec<bool>,
        acc: f64,
        best: &mut Vec<Option<usize>>,
        best_total: &mut f64,
    ) {
        if row == profit.len() {
            if acc > *best_total {
                *best_total = acc;
                best.clone_from(current);
            }
            return;
        }
        for h in 0..used.len() {
            if !used[h] {
                used[h] = true;
                current[row] = Some(h);
                search(profit, row + 1, current, used, acc + profit[row][h], best, best_total);
                used[h] = false;
            }
        }
        current[row] = None;
        search(profit, row + 1, current, used, acc, best, best_total);
    }
}

/// Random reference/hypothesis pair with all boundaries on the 10 ms grid
/// (so the frame oracle is exact).
#[allow(dead_code)]
pub fn random_rttm_pair(
    rng: &mut impl Rng,
    file_id: &str,
) -> (
    Vec<undiar_core::score::RttmRecord>,
    Vec<undiar_core::score::RttmRecord>,
) {
    use undiar_core::score::RttmRecord;
    let grid = |rng: &mut dyn rand::RngCore, lo: f64, hi: f64| -> f64 {
        let steps = ((hi - lo) / 0.01) as i64;
        lo + 0.01 * rng.gen_range(0..=steps) as f64
    };
    let make = |n_speakers: usize, rng: &mut dyn rand::RngCore| -> Vec<RttmRecord> {
        let mut records = Vec::new();
        for s in 0..n_speakers {
            let n_segs = rng.gen_range(1..=4);
            for _ in 0..n_segs {
                let onset = grid(rng, 0.0, 25.0);
                let duration = grid(rng, 0.3, 5.0);
                records.push(RttmRecord {
                    file_id: file_id.to_string(),
                    channel: "1".into(),
                    onset,
                    duration,
                    speaker: format!("s{s}"),
                });
            }
        }
        records
    };
    let reference = make(rng.gen_range(1..=4), rng);
    let hypothesis = make(rng.gen_range(1..=4), rng);
    (reference, hypothesis)
}
