//! Encoder architecture and training hyperparameters.

use crate::audio::CANONICAL_RATE;

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderConfig {
    pub kernel_sizes: Vec<usize>,
    pub strides: Vec<usize>,
    pub conv_channels: usize,
    pub linear_dims: Vec<usize>,
    pub segment_ms: f64,
    /// Edge-to-edge silence-free gap between the two views of a pair.
    pub pair_gap_ms: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub warmup_epochs: usize,
    /// Batch norm after every conv layer (ReLU is always applied).
    pub conv_batchnorm: bool,
    /// Upper bound on optimizer steps per epoch.
    pub steps_per_epoch_cap: usize,
    /// Regions shorter than this are excluded from pair sampling.
    pub min_region_seconds: f64,
    /// Off-diagonal weight of the cross-correlation loss.
    pub lambda: f64,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            kernel_sizes: vec![10, 10, 10, 8, 4, 4, 4],
            strides: vec![5, 5, 5, 4, 2, 2, 2],
            conv_channels: 128,
            linear_dims: vec![512, 512, 512],
            segment_ms: 500.0,
            pair_gap_ms: 500.0,
            batch_size: 2048,
            epochs: 30,
            warmup_epochs: 10,
            conv_batchnorm: true,
            steps_per_epoch_cap: 200,
            min_region_seconds: 3.0,
            lambda: 1.0,
        }
    }
}

impl EncoderConfig {
    pub fn embedding_dim(&self) -> usize {
        *self.linear_dims.last().expect("at least one linear layer")
    }

    pub fn segment_samples(&self) -> usize {
        (self.segment_ms / 1000.0 * CANONICAL_RATE as f64).round() as usize
    }

    pub fn pair_gap_samples(&self) -> usize {
        (self.pair_gap_ms / 1000.0 * CANONICAL_RATE as f64).round() as usize
    }

    /// Samples one pair needs inside a region: two windows plus the gap.
    pub fn pair_span_samples(&self) -> usize {
        2 * self.segment_samples() + self.pair_gap_samples()
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.kernel_sizes.len() != self.strides.len() {
            return Err(format!(
                "kernel_sizes ({}) and strides ({}) must match",
                self.kernel_sizes.len(),
                self.strides.len()
            ));
        }
        if self.kernel_sizes.is_empty() || self.linear_dims.is_empty() {
            return Err("need at least one conv and one linear layer".into());
        }
        if self.batch_size < 2 {
            return Err("batch_size must be at least 2 (batch norm and loss)".into());
        }
        Ok(())
    }

    /// Per-layer (pad, output_length) down the conv stack. A layer whose
    /// unpadded output would be empty gets just enough zero padding to emit
    /// one frame.
    pub fn conv_plan(&self) -> Vec<(usize, usize)> {
        let mut l = self.segment_samples();
        let mut plan = Vec::with_capacity(self.kernel_sizes.len());
        for (&k, &s) in self.kernel_sizes.iter().zip(&self.strides) {
            let pad = if l < k { (k - l).div_ceil(2) } else { 0 };
            let out = crate::nncore::conv1d_output_len(l, k, s, pad)
                .expect("padding guarantees at least one frame");
            plan.push((pad, out));
            l = out;
        }
        plan
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_conv_plan_matches_expected_lengths() {
        let cfg = EncoderConfig::default();
        let plan = cfg.conv_plan();
        let lengths: Vec<usize> = plan.iter().map(|(_, l)| *l).collect();
        assert_eq!(lengths, vec![1599, 318, 62, 14, 6, 2, 1]);
        let pads: Vec<usize> = plan.iter().map(|(p, _)| *p).collect();
        assert_eq!(pads, vec![0, 0, 0, 0, 0, 0, 1], "only layer 7 needs padding");
    }

    #[test]
    fn segment_samples_at_canonical_rate() {
        assert_eq!(EncoderConfig::default().segment_samples(), 8000);
        assert_eq!(EncoderConfig::default().pair_span_samples(), 24000);
    }

    #[test]
    fn validation_catches_mismatched_stacks() {
        let cfg = EncoderConfig {
            strides: vec![5, 5],
            ..EncoderConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
