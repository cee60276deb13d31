//! Property tests for the clustering invariants.

mod common;

use proptest::prelude::*;
use undiar_core::cluster::{ahc, cut_by_count, cut_by_threshold, DistanceMatrix, Linkage};

fn arbitrary_matrix() -> impl Strategy<Value = DistanceMatrix> {
    (2usize..16).prop_flat_map(|n| {
        proptest::collection::vec(0.01f64..10.0, n * (n - 1) / 2).prop_map(move |upper| {
            let mut it = upper.into_iter();
            DistanceMatrix::from_fn(n, |_, _| it.next().unwrap()).unwrap()
        })
    })
}

/// True when partition `fine` refines partition `coarse` (every fine cluster
/// sits inside one coarse cluster).
fn refines(fine: &[usize], coarse: &[usize]) -> bool {
    let k = fine.iter().max().unwrap() + 1;
    let mut coarse_of = vec![None; k];
    for (f, c) in fine.iter().zip(coarse.iter()) {
        match coarse_of[*f] {
            None => coarse_of[*f] = Some(*c),
            Some(existing) if existing != *c => return false,
            _ => {}
        }
    }
    true
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cut_by_count_yields_exactly_k_nonempty(d in arbitrary_matrix(), kf in 0.0f64..1.0) {
        let n = d.len();
        let dend = ahc(&d, Linkage::Average).unwrap();
        let k = 1 + ((n - 1) as f64 * kf) as usize;
        let labels = cut_by_count(&dend, k).unwrap();
        let mut counts = vec![0usize; k];
        for &l in &labels {
            prop_assert!(l < k);
            counts[l] += 1;
        }
        prop_assert!(counts.iter().all(|&c| c > 0));
    }

    #[test]
    fn threshold_cut_is_monotone(d in arbitrary_matrix(), t1 in 0.0f64..12.0, t2 in 0.0f64..12.0) {
        let (t1, t2) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let dend = ahc(&d, Linkage::Average).unwrap();
        let fine = cut_by_threshold(&dend, t1);
        let coarse = cut_by_threshold(&dend, t2);
        prop_assert!(refines(&fine, &coarse), "t1={t1} t2={t2}");
    }

    #[test]
    fn permutation_equivariance(d in arbitrary_matrix(), seed in 0u64..1000) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let n = d.len();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let permuted = DistanceMatrix::from_fn(n, |i, j| d.get(perm[i], perm[j])).unwrap();

        for linkage in [Linkage::Average, Linkage::Complete, Linkage::Single] {
            let base = common::ahc_oracle::naive_ahc(&d, linkage);
            let moved = ahc(&permuted, linkage).unwrap();
            for k in 1..=n {
                let labels_base = cut_by_count(&base, k).unwrap();
                let labels_moved = cut_by_count(&moved, k).unwrap();
                // partitions must agree up to label renaming: leaves i, j land
                // together after permutation iff perm[i], perm[j] did before
                for i in 0..n {
                    for j in (i + 1)..n {
                        let together_base = labels_base[perm[i]] == labels_base[perm[j]];
                        let together_moved = labels_moved[i] == labels_moved[j];
                        prop_assert_eq!(
                            together_base, together_moved,
                            "linkage {:?} k={} leaves ({}, {})", linkage, k, i, j
                        );
                    }
                }
            }
        }
    }
}
