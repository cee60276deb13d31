//! Fixed-length sliding-window segmentation inside speech regions.

use super::{SpeechRegion, Waveform};

/// A fixed-length window of one file, entirely inside one speech region.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub source_id: String,
    pub start_sample: usize,
    pub length: usize,
    /// Window center, in seconds from the start of the file.
    pub center_time: f64,
}

/// Sliding windows of `segment_ms` stepping by `hop_ms`, fully inside each
/// region. Regions shorter than one window yield nothing.
pub fn extract_segments(
    w: &Waveform,
    regions: &[SpeechRegion],
    segment_ms: f64,
    hop_ms: f64,
) -> Vec<Segment> {
    let rate = w.sample_rate as f64;
    let seg_len = (segment_ms / 1000.0 * rate).round() as usize;
    let hop_len = ((hop_ms / 1000.0 * rate).round() as usize).max(1);
    let mut out = Vec::new();
    if seg_len == 0 {
        return out;
    }
    for region in regions {
        let start = (region.onset * rate).round() as usize;
        let end = ((region.end() * rate).round() as usize).min(w.samples.len());
        let mut s = start;
        while s + seg_len <= end {
            out.push(Segment {
                source_id: w.source_id.clone(),
                start_sample: s,
                length: seg_len,
                center_time: (s as f64 + seg_len as f64 / 2.0) / rate,
            });
            s += hop_len;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn waveform(seconds: f64) -> Waveform {
        Waveform {
            samples: vec![0.1; (seconds * 16000.0) as usize],
            sample_rate: 16000,
            source_id: "w".into(),
        }
    }

    fn region(onset: f64, duration: f64) -> SpeechRegion {
        SpeechRegion { onset, duration }
    }

    #[test]
    fn exact_fit_gives_one_segment() {
        let w = waveform(2.0);
        let segs = extract_segments(&w, &[region(0.5, 0.5)], 500.0, 250.0);
        assert_eq!(segs.len(), 1);
        assert_eq!(segs[0].start_sample, 8000);
        assert_eq!(segs[0].length, 8000);
        assert!((segs[0].center_time - 0.75).abs() < 1e-9);
    }

    #[test]
    fn one_second_region_gives_three_segments() {
        let w = waveform(2.0);
        let segs = extract_segments(&w, &[region(0.0, 1.0)], 500.0, 250.0);
        assert_eq!(segs.len(), 3);
        let starts: Vec<usize> = segs.iter().map(|s| s.start_sample).collect();
        assert_eq!(starts, vec![0, 4000, 8000]);
    }

    #[test]
    fn too_short_region_gives_nothing() {
        let w = waveform(2.0);
        let segs = extract_segments(&w, &[region(0.0, 0.499)], 500.0, 250.0);
        assert!(segs.is_empty());
    }

    #[test]
    fn segments_never_straddle_region_bounds() {
        let w = waveform(10.0);
        let regions = vec![region(0.3, 1.4), region(2.05, 3.33), region(7.0, 0.6)];
        let segs = extract_segments(&w, &regions, 500.0, 250.0);
        assert!(!segs.is_empty());
        for s in &segs {
            let a = s.start_sample as f64 / 16000.0;
            let b = (s.start_sample + s.length) as f64 / 16000.0;
            let inside = regions
                .iter()
                .any(|r| a >= r.onset - 1e-6 && b <= r.end() + 1e-6);
            assert!(inside, "segment [{a}, {b}] outside all regions");
        }
    }
}
