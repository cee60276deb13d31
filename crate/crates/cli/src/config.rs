//! Flat sectioned key-value run configuration.
//!
//! ```text
//! # comment
//! [section]
//! key = value
//! ```
//!
//! Every tunable has a baked-in default; the seed is the one mandatory
//! field (reproducibility is not optional).

use anyhow::{anyhow, bail, Context, Result};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use undiar_core::audio::VadParams;
use undiar_core::cluster::Linkage;
use undiar_core::encoder::{EncoderConfig, LossKind};
use undiar_core::nncore::LarsConfig;
use undiar_core::pipeline::TuningParams;

#[derive(Debug, Clone, Default)]
pub struct RunConfig {
    sections: BTreeMap<String, BTreeMap<String, String>>,
    /// Directory of the config file; relative paths resolve against it.
    base_dir: PathBuf,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let mut cfg = Self::parse(&text)?;
        cfg.base_dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut sections: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        let mut current = String::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                current = name.trim().to_string();
                sections.entry(current.clone()).or_default();
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("config line {}: expected `key = value`", idx + 1))?;
            if current.is_empty() {
                bail!("config line {}: key before any [section]", idx + 1);
            }
            sections
                .get_mut(&current)
                .unwrap()
                .insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(RunConfig {
            sections,
            base_dir: PathBuf::from("."),
        })
    }

    fn raw(&self, section: &str, key: &str) -> Option<&str> {
        self.sections
            .get(section)
            .and_then(|s| s.get(key))
            .map(|s| s.as_str())
    }

    fn parse_key<T: std::str::FromStr>(&self, section: &str, key: &str, default: T) -> Result<T> {
        match self.raw(section, key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| anyhow!("config [{section}] {key} = {v:?} failed to parse")),
        }
    }

    fn list_usize(&self, section: &str, key: &str, default: &[usize]) -> Result<Vec<usize>> {
        match self.raw(section, key) {
            None => Ok(default.to_vec()),
            Some(v) => v
                .split(',')
                .map(|x| {
                    x.trim()
                        .parse()
                        .map_err(|_| anyhow!("config [{section}] {key}: bad entry {x:?}"))
                })
                .collect(),
        }
    }

    /// Replaces the seed (the --seed flag).
    pub fn override_seed(&mut self, seed: u64) {
        self.sections
            .entry("run".into())
            .or_default()
            .insert("seed".into(), seed.to_string());
    }

    /// The mandatory seed: there is no entropy default.
    pub fn seed(&self) -> Result<u64> {
        self.raw("run", "seed")
            .ok_or_else(|| anyhow!("config is missing the mandatory [run] seed"))?
            .parse()
            .map_err(|_| anyhow!("[run] seed must be an unsigned integer"))
    }

    pub fn jobs(&self) -> Result<usize> {
        self.parse_key("run", "jobs", 1)
    }

    pub fn path(&self, key: &str) -> Result<PathBuf> {
        let raw = self
            .raw("paths", key)
            .ok_or_else(|| anyhow!("config is missing [paths] {key}"))?;
        let p = PathBuf::from(raw);
        Ok(if p.is_absolute() {
            p
        } else {
            self.base_dir.join(p)
        })
    }

    pub fn encoder(&self) -> Result<EncoderConfig> {
        let d = EncoderConfig::default();
        let cfg = EncoderConfig {
            kernel_sizes: self.list_usize("encoder", "kernel_sizes", &d.kernel_sizes)?,
            strides: self.list_usize("encoder", "strides", &d.strides)?,
            conv_channels: self.parse_key("encoder", "conv_channels", d.conv_channels)?,
            linear_dims: self.list_usize("encoder", "linear_dims", &d.linear_dims)?,
            segment_ms: self.parse_key("encoder", "segment_ms", d.segment_ms)?,
            pair_gap_ms: self.parse_key("encoder", "pair_gap_ms", d.pair_gap_ms)?,
            batch_size: self.parse_key("encoder", "batch_size", d.batch_size)?,
            epochs: self.parse_key("encoder", "epochs", d.epochs)?,
            warmup_epochs: self.parse_key("encoder", "warmup_epochs", d.warmup_epochs)?,
            conv_batchnorm: self.parse_key("encoder", "conv_batchnorm", d.conv_batchnorm)?,
            steps_per_epoch_cap: self.parse_key(
                "encoder",
                "steps_per_epoch_cap",
                d.steps_per_epoch_cap,
            )?,
            min_region_seconds: self.parse_key(
                "encoder",
                "min_region_seconds",
                d.min_region_seconds,
            )?,
            lambda: self.parse_key("encoder", "lambda", d.lambda)?,
        };
        cfg.validate().map_err(|e| anyhow!("encoder config: {e}"))?;
        Ok(cfg)
    }

    pub fn loss_kind(&self) -> Result<LossKind> {
        match self.raw("encoder", "loss").unwrap_or("barlow") {
            s => s.parse().map_err(|e: String| anyhow!(e)),
        }
    }

    pub fn lars(&self) -> Result<LarsConfig> {
        let d = LarsConfig::default();
        Ok(LarsConfig {
            lr_weight: self.parse_key("lars", "lr_weight", d.lr_weight)?,
            lr_bias_bn: self.parse_key("lars", "lr_bias_bn", d.lr_bias_bn)?,
            momentum: self.parse_key("lars", "momentum", d.momentum)?,
            trust_coefficient: self.parse_key("lars", "trust_coefficient", d.trust_coefficient)?,
            weight_decay: self.parse_key("lars", "weight_decay", d.weight_decay)?,
            layerwise_adaptation: self.parse_key(
                "lars",
                "layerwise_adaptation",
                d.layerwise_adaptation,
            )?,
        })
    }

    pub fn vad(&self) -> Result<VadParams> {
        let d = VadParams::default();
        Ok(VadParams {
            frame_ms: self.parse_key("vad", "frame_ms", d.frame_ms)?,
            hop_ms: self.parse_key("vad", "hop_ms", d.hop_ms)?,
            threshold_db: self.parse_key("vad", "threshold_db", d.threshold_db)?,
            min_speech_ms: self.parse_key("vad", "min_speech_ms", d.min_speech_ms)?,
            min_gap_ms: self.parse_key("vad", "min_gap_ms", d.min_gap_ms)?,
        })
    }

    pub fn linkage(&self) -> Result<Linkage> {
        self.raw("pipeline", "linkage")
            .unwrap_or("average")
            .parse()
            .map_err(|e: String| anyhow!(e))
    }

    pub fn k_cut(&self) -> Result<usize> {
        self.parse_key("pipeline", "k_cut", 10)
    }

    pub fn inference_hop_ms(&self) -> Result<f64> {
        self.parse_key("pipeline", "hop_ms", 250.0)
    }

    pub fn collar(&self) -> Result<f64> {
        self.parse_key("pipeline", "collar", 0.25)
    }

    pub fn tuning(&self) -> Result<TuningParams> {
        let d = TuningParams::default();
        Ok(TuningParams {
            n_utterances: self.parse_key("pipeline", "n_utts", d.n_utterances)?,
            segs_per_draw: self.parse_key("pipeline", "segs_per_draw", d.segs_per_draw)?,
            speakers_per_utterance: (
                self.parse_key("pipeline", "speakers_per_utt_min", d.speakers_per_utterance.0)?,
                self.parse_key("pipeline", "speakers_per_utt_max", d.speakers_per_utterance.1)?,
            ),
            target_segments: self.parse_key("pipeline", "target_segments", d.target_segments)?,
            grid_size: self.parse_key("pipeline", "grid_size", d.grid_size)?,
            grid_subsample: self.parse_key("pipeline", "grid_subsample", d.grid_subsample)?,
            linkage: self.linkage()?,
        })
    }

    pub fn plda_iters(&self) -> Result<usize> {
        self.parse_key("plda", "em_iters", 10)
    }

    pub fn plda_length_normalize(&self) -> Result<bool> {
        self.parse_key("plda", "length_normalize", true)
    }

    pub fn plda_lda_dim(&self) -> Result<Option<usize>> {
        match self.raw("plda", "lda_dim") {
            None | Some("") | Some("none") => Ok(None),
            Some(v) => Ok(Some(v.parse().map_err(|_| {
                anyhow!("config [plda] lda_dim = {v:?} must be an integer or `none`")
            })?)),
        }
    }

    pub fn synth(&self, section: &str) -> Result<SynthConfig> {
        let d = SynthConfig::default();
        Ok(SynthConfig {
            n_speakers: self.parse_key(section, "n_speakers", d.n_speakers)?,
            utts_per_speaker: self.parse_key(section, "utts_per_speaker", d.utts_per_speaker)?,
            speakers_min: self.parse_key(section, "speakers_min", d.speakers_min)?,
            speakers_max: self.parse_key(section, "speakers_max", d.speakers_max)?,
            turn_min_s: self.parse_key(section, "turn_min_s", d.turn_min_s)?,
            turn_max_s: self.parse_key(section, "turn_max_s", d.turn_max_s)?,
            gap_min_s: self.parse_key(section, "gap_min_s", d.gap_min_s)?,
            gap_max_s: self.parse_key(section, "gap_max_s", d.gap_max_s)?,
            turns_min: self.parse_key(section, "turns_min", d.turns_min)?,
            turns_max: self.parse_key(section, "turns_max", d.turns_max)?,
        })
    }

    /// Canonical text for hashing into manifests: sorted sections and keys.
    pub fn snapshot(&self) -> String {
        let mut out = String::new();
        for (section, keys) in &self.sections {
            out.push_str(&format!("[{section}]\n"));
            for (k, v) in keys {
                out.push_str(&format!("{k} = {v}\n"));
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub n_speakers: usize,
    pub utts_per_speaker: usize,
    pub speakers_min: usize,
    pub speakers_max: usize,
    pub turn_min_s: f64,
    pub turn_max_s: f64,
    pub gap_min_s: f64,
    pub gap_max_s: f64,
    pub turns_min: usize,
    pub turns_max: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_speakers: 8,
            utts_per_speaker: 10,
            speakers_min: 2,
            speakers_max: 4,
            turn_min_s: 2.5,
            turn_max_s: 6.0,
            gap_min_s: 0.4,
            gap_max_s: 1.2,
            turns_min: 6,
            turns_max: 10,
        }
    }
}
