use undiar_core::audio::*;

fn main() {
    let spec = ConversationSpec::default();
    let (waves, rttm) = generate_synthetic_corpus(2, 1, &spec, 11);
    let w = &waves[0];
    println!("file {} dur {:.1}s", w.source_id, w.duration());
    // frame rms stats
    let frame = 480; // 30ms @ 16k
    let mut dbs = Vec::new();
    let mut i = 0;
    while i + frame <= w.samples.len() {
        let rms = (w.samples[i..i+frame].iter().map(|s| s*s).sum::<f64>() / frame as f64).sqrt();
        dbs.push(20.0 * rms.max(1e-10).log10());
        i += 160;
    }
    let mut sorted = dbs.clone();
    sorted.sort_by(|a,b| a.partial_cmp(b).unwrap());
    println!("frame dB: min {:.1} p25 {:.1} median {:.1} p75 {:.1} max {:.1}",
        sorted[0], sorted[sorted.len()/4], sorted[sorted.len()/2], sorted[3*sorted.len()/4], sorted[sorted.len()-1]);
    let regions = energy_vad(w, &VadParams::default());
    println!("vad regions: {}", regions.len());
    for r in regions.iter().take(5) { println!("  [{:.2}, {:.2}]", r.onset, r.end()); }
    println!("rttm turns for this file:");
    for r in rttm.iter().filter(|r| r.file_id == w.source_id).take(5) {
        println!("  [{:.2}, {:.2}] {}", r.onset, r.onset + r.duration, r.speaker);
    }
}
