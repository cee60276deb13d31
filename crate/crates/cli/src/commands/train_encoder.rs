//! `train-encoder`: self-supervised training on the train split, energy
//! VAD, writing a checkpoint plus a line-delimited loss log.

use super::{load_split, VadMode};
use crate::artifacts::{hash_file, write_manifest, Artifacts};
use crate::config::RunConfig;
use anyhow::{Context, Result};
use undiar_core::encoder::{train, LossKind, TrainOptions, TrainedEncoder};
use undiar_core::nncore::Container;

pub fn run(cfg: &RunConfig, loss_override: Option<LossKind>) -> Result<()> {
    let seed = cfg.seed()?;
    let encoder_cfg = cfg.encoder()?;
    let loss = match loss_override {
        Some(l) => l,
        None => cfg.loss_kind()?,
    };
    let loss_name = match loss {
        LossKind::Barlow => "barlow",
        LossKind::Vicreg => "vicreg",
    };

    let train_dir = cfg.path("train_dir")?;
    let corpus = load_split(cfg, &train_dir, VadMode::Energy)?;
    let eligible: usize = corpus.iter().map(|(_, r)| r.len()).sum();
    eprintln!(
        "train-encoder: {} files, {} speech regions, loss {loss_name}",
        corpus.len(),
        eligible
    );

    let options = TrainOptions {
        lars: cfg.lars()?,
        loss,
        seed,
        ..TrainOptions::default()
    };
    let trained: TrainedEncoder<f32> = train(&encoder_cfg, &corpus, &options)?;

    let arts = Artifacts::new(cfg.path("artifact_dir")?);
    arts.dir("checkpoints")?;
    let ckpt_path = arts.encoder_checkpoint(loss_name);
    let mut container = Container::new();
    trained
        .model
        .write_into(&mut container, Some(&trained.lars_state));
    container.set_meta("seed", seed);
    container.set_meta("loss", loss_name);
    container
        .save(&ckpt_path)
        .with_context(|| format!("cannot write checkpoint {}", ckpt_path.display()))?;

    // line-delimited training log: epoch step loss lr_multiplier
    let mut log = String::new();
    for e in &trained.log {
        log.push_str(&format!(
            "epoch={} step={} loss={:.6} lr={:.6} degenerate_dims={}\n",
            e.epoch, e.step, e.loss, e.lr_scale, e.degenerate_dims
        ));
    }
    std::fs::write(arts.training_log(loss_name), log)?;

    let mut inputs = Vec::new();
    for path in crate::artifacts::list_wavs(&train_dir)? {
        inputs.push((
            path.file_name().unwrap().to_string_lossy().into_owned(),
            hash_file(&path)?,
        ));
    }
    write_manifest(&ckpt_path, "train-encoder", seed, &cfg.snapshot(), &inputs)?;

    let first = trained.log.first().map(|e| e.loss).unwrap_or(f64::NAN);
    let last = trained.log.last().map(|e| e.loss).unwrap_or(f64::NAN);
    eprintln!(
        "train-encoder: {} steps, loss {first:.4} -> {last:.4}, checkpoint {}",
        trained.log.len(),
        ckpt_path.display()
    );
    Ok(())
}
