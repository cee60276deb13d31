//! Pipeline-level invariants.

mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use undiar_core::cluster::{ahc, Linkage};
use undiar_core::pipeline::row_distance;

/// Scaling every similarity entry by a positive constant squares the row
/// distances uniformly, so the AHC merge order is unchanged (heights scale,
/// partitions do not).
#[test]
fn similarity_scaling_preserves_merge_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    for case in 0..20 {
        let n = rng.gen_range(4..20);
        // symmetric random similarity matrix via its lower triangle
        let mut entries = vec![0.0f64; n * n];
        for i in 0..n {
            for j in 0..=i {
                let v = rng.gen_range(-3.0..3.0);
                entries[i * n + j] = v;
                entries[j * n + i] = v;
            }
        }
        let scale: f64 = rng.gen_range(0.1..7.0);
        let scaled: Vec<f64> = entries.iter().map(|v| v * scale).collect();

        let base = row_distance(&test_matrix(n, entries));
        let after = row_distance(&test_matrix(n, scaled));

        let dend_base = ahc(&base, Linkage::Average).unwrap();
        let dend_after = ahc(&after, Linkage::Average).unwrap();
        for (a, b) in dend_base.merges.iter().zip(&dend_after.merges) {
            assert_eq!((a.a, a.b, a.size), (b.a, b.b, b.size), "case {case}");
            // heights scale by the square of the constant
            let rel = (b.height - a.height * scale * scale).abs()
                / (a.height * scale * scale).abs().max(1e-12);
            assert!(rel < 1e-9, "case {case}: {} vs {}", b.height, a.height);
        }
    }
}

fn test_matrix(n: usize, entries: Vec<f64>) -> undiar_core::pipeline::SimilarityMatrix {
    undiar_core::pipeline::SimilarityMatrix::from_raw(n, entries)
}
