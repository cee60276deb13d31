//! Command-line driver for the unsupervised diarization pipeline.
//!
//! The stages run as discrete, resumable steps, each writing versioned
//! artifacts plus a manifest: synth-corpus, train-encoder, embed,
//! pseudo-label, train-plda, tune-threshold, diarize, score, ablate.

mod artifacts;
mod commands;
mod config;

use anyhow::Result;
use clap::{Parser, Subcommand};
use commands::diarize::{DiarizeArgs, StoppingArg};
use commands::score::ScoreArgs;
use commands::VadMode;
use config::RunConfig;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "undiar",
    about = "Fully unsupervised speaker diarization: self-supervised encoder, PLDA, clustering",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Run configuration file.
    #[arg(long, short)]
    config: PathBuf,
    /// Worker threads for batch and file parallelism (results do not
    /// depend on this); defaults to the config's [run] jobs, then 1.
    #[arg(long)]
    jobs: Option<usize>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic train/dev/test corpus with ground truth.
    SynthCorpus {
        #[command(flatten)]
        common: Common,
    },
    /// Train the speaker encoder self-supervised on the train split.
    TrainEncoder {
        #[command(flatten)]
        common: Common,
        /// barlow | vicreg (defaults to the config's [encoder] loss).
        #[arg(long)]
        loss: Option<String>,
    },
    /// Write per-file embedding artifacts for a split.
    Embed {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "dev")]
        split: String,
        #[arg(long, default_value = "energy")]
        vad: String,
        #[arg(long, default_value = "barlow")]
        loss: String,
    },
    /// Cluster dev files and label each file's largest cluster.
    PseudoLabel {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "energy")]
        vad: String,
        #[arg(long, default_value = "barlow")]
        loss: String,
    },
    /// Fit the preprocessor and two-covariance PLDA on pseudo-labels.
    TrainPlda {
        #[command(flatten)]
        common: Common,
    },
    /// Tune the clustering stopping threshold on synthetic utterances.
    TuneThreshold {
        #[command(flatten)]
        common: Common,
    },
    /// Diarize a split or a single file, emitting RTTM.
    Diarize {
        #[command(flatten)]
        common: Common,
        #[arg(long, conflicts_with = "input")]
        split: Option<String>,
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value = "energy")]
        vad: String,
        /// threshold:auto | threshold:<t> | count:<k>
        #[arg(long, default_value = "threshold:auto")]
        stopping: String,
        #[arg(long, default_value = "barlow")]
        loss: String,
        /// Output tag (defaults to `<split>-<vad>`).
        #[arg(long)]
        out_tag: Option<String>,
    },
    /// Score a hypothesis RTTM against a reference.
    Score {
        #[arg(long)]
        r#ref: PathBuf,
        #[arg(long)]
        hyp: PathBuf,
        #[arg(long, default_value_t = 0.25)]
        collar: f64,
        /// Score overlap regions instead of excluding them.
        #[arg(long)]
        score_overlap: bool,
        /// Report only speaker confusion over reference speech.
        #[arg(long)]
        confusion_only: bool,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Run the component ablations over the test split.
    Ablate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "barlow")]
        loss: String,
        /// Also report the alternative-objective encoder (artifact name).
        #[arg(long)]
        vicreg_loss: Option<String>,
    },
}

fn load_config(common: &Common) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.override_seed(seed);
    }
    let jobs = match common.jobs {
        Some(j) => j,
        None => cfg.jobs()?,
    };
    undiar_core::nncore::set_jobs(jobs);
    Ok(cfg)
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::SynthCorpus { common } => {
            let cfg = load_config(&common)?;
            commands::synth_corpus::run(&cfg)
        }
        Command::TrainEncoder { common, loss } => {
            let cfg = load_config(&common)?;
            let loss = match loss {
                Some(s) => Some(s.parse().map_err(|e: String| anyhow::anyhow!(e))?),
                None => None,
            };
            commands::train_encoder::run(&cfg, loss)
        }
        Command::Embed {
            common,
            split,
            vad,
            loss,
        } => {
            let cfg = load_config(&common)?;
            let vad: VadMode = vad.parse().map_err(|e: String| anyhow::anyhow!(e))?;
            commands::embed::run(&cfg, &split, vad, &loss)
        }
        Command::PseudoLabel { common, vad, loss } => {
            let cfg = load_config(&common)?;
            let vad: VadMode = vad.parse().map_err(|e: String| anyhow::anyhow!(e))?;
            commands::pseudo_label::run(&cfg, vad, &loss)
        }
        Command::TrainPlda { common } => {
            let cfg = load_config(&common)?;
            commands::train_plda::run(&cfg)
        }
        Command::TuneThreshold { common } => {
            let cfg = load_config(&common)?;
            commands::tune_threshold::run(&cfg)
        }
        Command::Diarize {
            common,
            split,
            input,
            vad,
            stopping,
            loss,
            out_tag,
        } => {
            let cfg = load_config(&common)?;
            let args = DiarizeArgs {
                split,
                input,
                vad: vad.parse().map_err(|e: String| anyhow::anyhow!(e))?,
                stopping: stopping
                    .parse::<StoppingArg>()
                    .map_err(|e| anyhow::anyhow!(e))?,
                loss_name: loss,
                out_tag,
            };
            commands::diarize::run(&cfg, &args)
        }
        Command::Score {
            r#ref,
            hyp,
            collar,
            score_overlap,
            confusion_only,
            csv,
        } => commands::score::run(&ScoreArgs {
            reference: &r#ref,
            hypothesis: &hyp,
            collar,
            ignore_overlap: !score_overlap,
            confusion_only,
            csv_out: csv.as_deref(),
        }),
        Command::Ablate {
            common,
            loss,
            vicreg_loss,
        } => {
            let cfg = load_config(&common)?;
            commands::ablate::run(&cfg, &loss, vicreg_loss.as_deref())
        }
    }
}
