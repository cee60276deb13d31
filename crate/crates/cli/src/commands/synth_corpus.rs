//! `synth-corpus`: writes train/dev/test splits of synthetic conversations
//! with ground-truth RTTM, deterministic in the seed.

use crate::artifacts::{hash_str, write_manifest};
use crate::config::RunConfig;
use anyhow::{Context, Result};
use undiar_core::audio::{generate_synthetic_corpus, write_wav, ConversationSpec};
use undiar_core::score::write_rttm;

pub fn run(cfg: &RunConfig) -> Result<()> {
    let seed = cfg.seed()?;
    // (split name, path key, section, salt); voices are shared, audio is not
    let splits = [
        ("train", "train_dir", "synth", 0u64),
        ("dev", "dev_dir", "synth-dev", 1),
        ("test", "test_dir", "synth-test", 2),
    ];
    for (name, path_key, section, salt) in splits {
        let dir = cfg.path(path_key)?;
        std::fs::create_dir_all(&dir)
            .with_context(|| format!("cannot create {}", dir.display()))?;
        // split-specific sections fall back to [synth] values via defaults
        let synth = if has_section_values(cfg, section) {
            cfg.synth(section)?
        } else {
            cfg.synth("synth")?
        };
        let spec = ConversationSpec {
            speakers_per_conversation: (synth.speakers_min, synth.speakers_max),
            turn_seconds: (synth.turn_min_s, synth.turn_max_s),
            gap_seconds: (synth.gap_min_s, synth.gap_max_s),
            turns_per_conversation: (synth.turns_min, synth.turns_max),
            file_prefix: format!("{name}-"),
            split_salt: salt,
            ..ConversationSpec::default()
        };
        let (waves, records) =
            generate_synthetic_corpus(synth.n_speakers, synth.utts_per_speaker, &spec, seed);
        let mut total_seconds = 0.0;
        for w in &waves {
            total_seconds += w.duration();
            write_wav(&dir.join(format!("{}.wav", w.source_id)), w)?;
        }
        let rttm_text = write_rttm(&records);
        std::fs::write(dir.join("reference.rttm"), &rttm_text)?;
        write_manifest(
            &dir.join("reference.rttm"),
            "synth-corpus",
            seed,
            &cfg.snapshot(),
            &[(format!("{name}-rttm"), hash_str(&rttm_text))],
        )?;
        eprintln!(
            "synth-corpus: {name}: {} conversations, {:.1} min audio -> {}",
            waves.len(),
            total_seconds / 60.0,
            dir.display()
        );
    }
    Ok(())
}

fn has_section_values(cfg: &RunConfig, section: &str) -> bool {
    // a split section overrides [synth] only when present in the file
    cfg.snapshot().contains(&format!("[{section}]"))
}

/// Config path key for a split name.
pub fn split_dir_key(split: &str) -> &'static str {
    match split {
        "train" => "train_dir",
        "dev" => "dev_dir",
        _ => "test_dir",
    }
}
