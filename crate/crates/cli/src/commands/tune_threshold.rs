//! `tune-threshold`: synthesizes multi-pseudo-speaker utterances from the
//! labeled vectors and sweeps the clustering threshold for minimum DER.

use crate::artifacts::{hash_file, write_manifest, Artifacts};
use crate::config::RunConfig;
use anyhow::Result;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use undiar_core::nncore::Container;
use undiar_core::pipeline::{synthesize_tuning_utterances, tune_threshold};

pub fn run(cfg: &RunConfig) -> Result<()> {
    let seed = cfg.seed()?;
    let arts = Artifacts::new(cfg.path("artifact_dir")?);
    let set = super::pseudo_label::load(&arts)?;
    let (model, pre) = arts.load_plda()?;
    let scorer = model.scorer();
    let params = cfg.tuning()?;

    // a fixed offset decouples this stage's randomness from training's
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x7461756e65)); // "tune"
    let utterances = synthesize_tuning_utterances(&set, &params, &mut rng)?;
    let result = tune_threshold(&utterances, &scorer, &pre, &params)?;

    let best = result
        .dev_der_curve
        .iter()
        .map(|&(_, d)| d)
        .fold(f64::INFINITY, f64::min);
    eprintln!(
        "tune-threshold: {} utterances, grid {}, best DER {:.4} at threshold {:.6}",
        result.n_utterances,
        result.dev_der_curve.len(),
        best,
        result.threshold
    );

    arts.dir("thresholds")?;
    let mut c = Container::new();
    c.set_meta("kind", "threshold");
    c.set_meta("seed", seed);
    c.set_meta("threshold", format!("{:.17e}", result.threshold));
    c.set_meta("n_utterances", result.n_utterances);
    let curve = undiar_core::nncore::Tensor::<f64>::from_vec(
        &[result.dev_der_curve.len(), 2],
        result
            .dev_der_curve
            .iter()
            .flat_map(|&(t, d)| [t, d])
            .collect(),
    );
    c.add_tensor("curve", &curve);
    let path = arts.threshold();
    c.save(&path)?;

    // curve as CSV for plotting
    let mut csv = String::from("threshold,der\n");
    for (t, d) in &result.dev_der_curve {
        csv.push_str(&format!("{t:.9},{d:.6}\n"));
    }
    std::fs::write(arts.threshold_curve(), csv)?;

    write_manifest(
        &path,
        "tune-threshold",
        seed,
        &cfg.snapshot(),
        &[
            ("pseudo-labels".into(), hash_file(&arts.pseudo_labels())?),
            ("plda".into(), hash_file(&arts.plda_model())?),
        ],
    )?;
    eprintln!("tune-threshold: threshold -> {}", path.display());
    Ok(())
}
