//! Per-epoch learning-rate multiplier: linear warm-up, then cosine decay.

#[derive(Debug, Clone, Copy)]
pub struct LrSchedule {
    pub warmup_epochs: usize,
    pub total_epochs: usize,
}

impl Default for LrSchedule {
    fn default() -> Self {
        LrSchedule {
            warmup_epochs: 10,
            total_epochs: 30,
        }
    }
}

impl LrSchedule {
    pub fn new(warmup_epochs: usize, total_epochs: usize) -> Self {
        LrSchedule {
            warmup_epochs,
            total_epochs,
        }
    }

    /// Multiplier for epoch `e` (0-based). Reaches 1.0 at the last warm-up
    /// epoch and decays to 0.0 at `total_epochs`.
    pub fn lr_at(&self, epoch: usize) -> f64 {
        if epoch < self.warmup_epochs {
            (epoch + 1) as f64 / self.warmup_epochs as f64
        } else {
            let span = self.total_epochs.saturating_sub(self.warmup_epochs).max(1);
            let t = (epoch - self.warmup_epochs) as f64 / span as f64;
            0.5 * (1.0 + (std::f64::consts::PI * t.min(1.0)).cos())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn warmup_boundary_is_continuous() {
        let s = LrSchedule::default();
        assert_eq!(s.lr_at(9), 1.0); // end of warm-up
        assert_eq!(s.lr_at(10), 1.0); // cos(0)
    }

    #[test]
    fn endpoints() {
        let s = LrSchedule::default();
        assert!((s.lr_at(0) - 0.1).abs() < 1e-15);
        assert!(s.lr_at(30).abs() < 1e-15);
    }

    #[test]
    fn never_negative() {
        let s = LrSchedule::new(3, 12);
        for e in 0..40 {
            assert!(s.lr_at(e) >= 0.0);
        }
    }
}
