//! Property tests for the tensor-op contracts.

use proptest::prelude::*;
use undiar_core::nncore::{conv1d_forward, conv1d_output_len, Tensor};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    /// The output-length formula holds whenever the padded input fits the
    /// kernel at least once, and the op realizes exactly that length.
    #[test]
    fn conv_output_length_formula(
        l in 1usize..64,
        k in 1usize..16,
        s in 1usize..8,
        p in 0usize..8,
        b in 1usize..3,
        c_in in 1usize..3,
    ) {
        prop_assume!(l + 2 * p >= k);
        let expect = (l + 2 * p - k) / s + 1;
        prop_assert_eq!(conv1d_output_len(l, k, s, p), Some(expect));

        let input = Tensor::<f64>::zeros(&[b, c_in, l]);
        let weight = Tensor::<f64>::zeros(&[2, c_in, k]);
        let bias = Tensor::<f64>::zeros(&[2]);
        let out = conv1d_forward(&input, &weight, &bias, s, p).unwrap();
        prop_assert_eq!(out.shape(), &[b, 2, expect]);
    }

    #[test]
    fn conv_too_small_input_is_rejected(
        l in 1usize..8,
        extra in 1usize..8,
    ) {
        let k = l + extra; // kernel longer than input, no padding
        prop_assert_eq!(conv1d_output_len(l, k, 1, 0), None);
        let input = Tensor::<f64>::zeros(&[1, 1, l]);
        let weight = Tensor::<f64>::zeros(&[1, 1, k]);
        let bias = Tensor::<f64>::zeros(&[1]);
        prop_assert!(conv1d_forward(&input, &weight, &bias, 1, 0).is_err());
    }
}
