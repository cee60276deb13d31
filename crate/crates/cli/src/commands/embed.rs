//! `embed`: writes per-file embedding artifacts for a split, mostly for
//! inspection and external analysis. The pipeline stages compute their own
//! embeddings on the fly.

use super::{load_split, VadMode};
use crate::artifacts::{write_manifest, Artifacts};
use crate::config::RunConfig;
use anyhow::Result;
use undiar_core::encoder::embed_file;
use undiar_core::nncore::{Container, Tensor};

pub fn run(cfg: &RunConfig, split: &str, vad: VadMode, loss_name: &str) -> Result<()> {
    let seed = cfg.seed()?;
    let arts = Artifacts::new(cfg.path("artifact_dir")?);
    let model = arts.load_encoder(loss_name)?;
    let dir = cfg.path(super::synth_corpus::split_dir_key(split))?;
    let files = load_split(cfg, &dir, vad)?;
    let hop = cfg.inference_hop_ms()?;

    let vad_name = match vad {
        VadMode::Energy => "energy",
        VadMode::Oracle => "oracle",
    };
    let out_dir = arts.dir(&format!("embeddings/{split}-{vad_name}"))?;
    let mut n_total = 0usize;
    for (w, regions) in &files {
        let embeddings = embed_file(&model, w, regions, hop)?;
        n_total += embeddings.len();
        let n = embeddings.len();
        let d = model.embedding_dim();
        let mut vectors = Tensor::<f64>::zeros(&[n, d]);
        let mut times = Tensor::<f64>::zeros(&[n]);
        for (i, e) in embeddings.iter().enumerate() {
            vectors.data_mut()[i * d..(i + 1) * d].copy_from_slice(&e.vector);
            times.data_mut()[i] = e.center_time;
        }
        let mut c = Container::new();
        c.set_meta("kind", "embeddings");
        c.set_meta("file_id", &w.source_id);
        c.set_meta("hop_ms", hop);
        c.add_tensor("vectors", &vectors);
        c.add_tensor("center_times", &times);
        let path = out_dir.join(format!("{}.emb", w.source_id));
        c.save(&path)?;
    }
    write_manifest(
        &out_dir.join("embeddings"),
        "embed",
        seed,
        &cfg.snapshot(),
        &[],
    )?;
    eprintln!(
        "embed: {} files, {} embeddings -> {}",
        files.len(),
        n_total,
        out_dir.display()
    );
    Ok(())
}
