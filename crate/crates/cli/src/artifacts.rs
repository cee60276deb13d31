//! Artifact directory layout, manifests, and stage-dependency loading with
//! errors that name the command to run first.

use anyhow::{anyhow, Context, Result};
use std::io::Read;
use std::path::{Path, PathBuf};
use undiar_core::audio::{read_wav, resample, Waveform, CANONICAL_RATE};
use undiar_core::encoder::Model;
use undiar_core::nncore::Container;
use undiar_core::plda::{Mat, PldaModel, Preprocessor};
use undiar_core::score::{parse_rttm, RttmRecord};

pub struct Artifacts {
    pub root: PathBuf,
}

impl Artifacts {
    pub fn new(root: PathBuf) -> Self {
        Artifacts { root }
    }

    pub fn dir(&self, kind: &str) -> Result<PathBuf> {
        let p = self.root.join(kind);
        std::fs::create_dir_all(&p)
            .with_context(|| format!("cannot create artifact dir {}", p.display()))?;
        Ok(p)
    }

    pub fn encoder_checkpoint(&self, loss: &str) -> PathBuf {
        self.root.join("checkpoints").join(format!("encoder-{loss}.ckpt"))
    }

    pub fn training_log(&self, loss: &str) -> PathBuf {
        self.root.join("checkpoints").join(format!("encoder-{loss}.log"))
    }

    pub fn pseudo_labels(&self) -> PathBuf {
        self.root.join("plda").join("pseudo-labels.ckpt")
    }

    pub fn plda_model(&self) -> PathBuf {
        self.root.join("plda").join("plda.ckpt")
    }

    pub fn threshold(&self) -> PathBuf {
        self.root.join("thresholds").join("threshold.ckpt")
    }

    pub fn threshold_curve(&self) -> PathBuf {
        self.root.join("thresholds").join("curve.csv")
    }

    pub fn rttm_out(&self, tag: &str) -> PathBuf {
        self.root.join("rttm").join(format!("{tag}.rttm"))
    }

    pub fn report(&self, name: &str) -> PathBuf {
        self.root.join("reports").join(name)
    }

    pub fn load_encoder(&self, loss: &str) -> Result<Model<f32>> {
        let path = self.encoder_checkpoint(loss);
        let container = Container::load(&path).with_context(|| {
            format!(
                "encoder checkpoint not found or unreadable at {}; run `undiar train-encoder` first",
                path.display()
            )
        })?;
        let (model, _) = Model::read_from(&container)
            .with_context(|| format!("corrupt encoder checkpoint {}", path.display()))?;
        Ok(model)
    }

    pub fn load_plda(&self) -> Result<(PldaModel, Preprocessor)> {
        let path = self.plda_model();
        let container = Container::load(&path).with_context(|| {
            format!(
                "PLDA model not found at {}; run `undiar train-plda` first",
                path.display()
            )
        })?;
        let model = PldaModel::read_from(&container)
            .with_context(|| format!("corrupt PLDA artifact {}", path.display()))?;
        let pre = read_preprocessor(&container)
            .with_context(|| format!("corrupt preprocessor in {}", path.display()))?;
        Ok((model, pre))
    }

    pub fn load_threshold(&self) -> Result<f64> {
        let path = self.threshold();
        let container = Container::load(&path).with_context(|| {
            format!(
                "tuned threshold not found at {}; run `undiar tune-threshold` first",
                path.display()
            )
        })?;
        container
            .meta_parse::<f64>("threshold")
            .map_err(|e| anyhow!("corrupt threshold artifact: {e}"))
    }
}

pub fn write_preprocessor(c: &mut Container, pre: &Preprocessor) {
    let d = pre.mean.len();
    c.add_tensor(
        "pre.mean",
        &undiar_core::nncore::Tensor::<f64>::from_vec(&[d], pre.mean.clone()),
    );
    c.add_tensor(
        "pre.whitening",
        &undiar_core::nncore::Tensor::<f64>::from_vec(&[d, d], pre.whitening.data.clone()),
    );
    if let Some(p) = &pre.projection {
        c.add_tensor(
            "pre.projection",
            &undiar_core::nncore::Tensor::<f64>::from_vec(&[p.rows, p.cols], p.data.clone()),
        );
    }
    c.set_meta("pre.length_normalize", pre.length_normalize);
}

pub fn read_preprocessor(c: &Container) -> Result<Preprocessor> {
    let mean: undiar_core::nncore::Tensor<f64> = c.tensor("pre.mean")?;
    let d = mean.len();
    let whitening: undiar_core::nncore::Tensor<f64> = c.tensor("pre.whitening")?;
    let projection = if c.has_tensor("pre.projection") {
        let t: undiar_core::nncore::Tensor<f64> = c.tensor("pre.projection")?;
        let rows = t.shape()[0];
        let cols = t.shape()[1];
        Some(Mat {
            rows,
            cols,
            data: t.into_data(),
        })
    } else {
        None
    };
    Ok(Preprocessor {
        mean: mean.into_data(),
        whitening: Mat {
            rows: d,
            cols: d,
            data: whitening.into_data(),
        },
        projection,
        length_normalize: c.meta_parse("pre.length_normalize")?,
    })
}

/// FNV-1a over a file's bytes, for manifests.
pub fn hash_file(path: &Path) -> Result<u64> {
    let mut f = std::fs::File::open(path)
        .with_context(|| format!("cannot open {} for hashing", path.display()))?;
    let mut hash: u64 = 0xcbf29ce484222325;
    let mut buf = [0u8; 65536];
    loop {
        let n = f.read(&mut buf)?;
        if n == 0 {
            break;
        }
        for &b in &buf[..n] {
            hash ^= b as u64;
            hash = hash.wrapping_mul(0x100000001b3);
        }
    }
    Ok(hash)
}

pub fn hash_str(s: &str) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for b in s.bytes() {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

/// Deterministic stage manifest: format version, command, seed, config
/// snapshot hash, and the hash of every input. No timestamps.
pub fn write_manifest(
    artifact_path: &Path,
    command: &str,
    seed: u64,
    config_snapshot: &str,
    inputs: &[(String, u64)],
) -> Result<()> {
    let mut out = String::new();
    out.push_str(&format!(
        "format_version = {}\n",
        undiar_core::nncore::CONTAINER_VERSION
    ));
    out.push_str(&format!("command = {command}\n"));
    out.push_str(&format!("seed = {seed}\n"));
    out.push_str(&format!("config_hash = {:016x}\n", hash_str(config_snapshot)));
    for (name, hash) in inputs {
        out.push_str(&format!("input {name} = {hash:016x}\n"));
    }
    let path = artifact_path.with_extension(format!(
        "{}manifest",
        artifact_path
            .extension()
            .map(|e| format!("{}.", e.to_string_lossy()))
            .unwrap_or_default()
    ));
    std::fs::write(&path, out)
        .with_context(|| format!("cannot write manifest {}", path.display()))?;
    Ok(())
}

/// Sorted wav files of a directory.
pub fn list_wavs(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    let entries = std::fs::read_dir(dir)
        .with_context(|| format!("cannot list directory {}", dir.display()))?;
    for entry in entries {
        let path = entry?.path();
        if path.extension().map(|e| e == "wav").unwrap_or(false) {
            out.push(path);
        }
    }
    out.sort();
    if out.is_empty() {
        anyhow::bail!("no .wav files in {}", dir.display());
    }
    Ok(out)
}

/// Reads a wav and resamples it to the canonical rate.
pub fn load_canonical(path: &Path) -> Result<Waveform> {
    let w = read_wav(path, true)?;
    Ok(if w.sample_rate == CANONICAL_RATE {
        w
    } else {
        resample(&w, CANONICAL_RATE)
    })
}

/// Loads a split's reference RTTM (ground truth or oracle-VAD source).
pub fn load_reference(dir: &Path) -> Result<Vec<RttmRecord>> {
    let path = dir.join("reference.rttm");
    let text = std::fs::read_to_string(&path).with_context(|| {
        format!(
            "reference RTTM not found at {}; oracle VAD and scoring need it",
            path.display()
        )
    })?;
    Ok(parse_rttm(&text)?)
}
