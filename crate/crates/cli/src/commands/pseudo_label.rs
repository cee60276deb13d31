//! `pseudo-label`: clusters each dev file's embeddings, keeps the largest
//! cluster as a fresh pseudo-speaker, and writes the labeled vector set.

use super::{load_split, VadMode};
use crate::artifacts::{write_manifest, Artifacts};
use crate::config::RunConfig;
use anyhow::Result;
use undiar_core::nncore::{Container, Tensor};
use undiar_core::pipeline::generate_pseudo_labels;

pub fn run(cfg: &RunConfig, vad: VadMode, loss_name: &str) -> Result<()> {
    let seed = cfg.seed()?;
    let arts = Artifacts::new(cfg.path("artifact_dir")?);
    let model = arts.load_encoder(loss_name)?;
    let dev_dir = cfg.path("dev_dir")?;
    let files = load_split(cfg, &dev_dir, vad)?;

    let set = generate_pseudo_labels(
        &model,
        &files,
        cfg.k_cut()?,
        cfg.inference_hop_ms()?,
        cfg.linkage()?,
    )?;
    for skipped in &set.skipped_files {
        eprintln!("pseudo-label: skipped {skipped} (fewer than k_cut segments)");
    }

    let n = set.vectors.len();
    let d = set.vectors.first().map(|v| v.len()).unwrap_or(0);
    let mut vectors = Tensor::<f64>::zeros(&[n, d]);
    let mut labels = Tensor::<f64>::zeros(&[n]);
    let mut times = Tensor::<f64>::zeros(&[n]);
    for i in 0..n {
        vectors.data_mut()[i * d..(i + 1) * d].copy_from_slice(&set.vectors[i]);
        labels.data_mut()[i] = set.labels[i] as f64;
        times.data_mut()[i] = set.vector_times[i];
    }

    let mut c = Container::new();
    c.set_meta("kind", "pseudo-labels");
    c.set_meta("seed", seed);
    c.set_meta("n_speakers", set.n_speakers());
    c.set_meta("speaker_files", set.speaker_files.join(","));
    c.add_tensor("vectors", &vectors);
    c.add_tensor("labels", &labels);
    c.add_tensor("center_times", &times);

    arts.dir("plda")?;
    let path = arts.pseudo_labels();
    c.save(&path)?;
    write_manifest(&path, "pseudo-label", seed, &cfg.snapshot(), &[])?;
    eprintln!(
        "pseudo-label: {} pseudo-speakers, {} vectors -> {}",
        set.n_speakers(),
        n,
        path.display()
    );
    Ok(())
}

/// Reads the pseudo-label artifact back into memory.
pub fn load(arts: &Artifacts) -> Result<undiar_core::pipeline::PseudoLabeledSet> {
    let path = arts.pseudo_labels();
    let c = Container::load(&path).map_err(|_| {
        anyhow::anyhow!(
            "pseudo-labels not found at {}; run `undiar pseudo-label` first",
            path.display()
        )
    })?;
    let vectors: Tensor<f64> = c.tensor("vectors")?;
    let labels: Tensor<f64> = c.tensor("labels")?;
    let times: Tensor<f64> = c.tensor("center_times")?;
    let n = labels.len();
    let d = if n > 0 { vectors.len() / n } else { 0 };
    let mut set = undiar_core::pipeline::PseudoLabeledSet {
        speaker_files: c
            .meta("speaker_files")?
            .split(',')
            .map(|s| s.to_string())
            .collect(),
        ..Default::default()
    };
    for i in 0..n {
        set.vectors.push(vectors.data()[i * d..(i + 1) * d].to_vec());
        set.labels.push(labels.data()[i] as usize);
        set.vector_times.push(times.data()[i]);
    }
    Ok(set)
}
