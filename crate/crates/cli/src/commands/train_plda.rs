//! `train-plda`: fits the preprocessing chain and the two-covariance PLDA
//! on the pseudo-labeled development vectors.

use crate::artifacts::{hash_file, write_manifest, write_preprocessor, Artifacts};
use crate::config::RunConfig;
use anyhow::Result;
use undiar_core::nncore::Container;
use undiar_core::plda::{fit_preprocessor, plda_train, WhitenSource};

pub fn run(cfg: &RunConfig) -> Result<()> {
    let seed = cfg.seed()?;
    let arts = Artifacts::new(cfg.path("artifact_dir")?);
    let set = super::pseudo_label::load(&arts)?;

    let pre = fit_preprocessor(
        &set.vectors,
        &set.labels,
        WhitenSource::TotalCovariance,
        cfg.plda_length_normalize()?,
        cfg.plda_lda_dim()?,
    )?;
    let prepared: Vec<Vec<f64>> = set.vectors.iter().map(|v| pre.apply(v)).collect();
    let (model, stats) = plda_train(&prepared, &set.labels, cfg.plda_iters()?)?;
    if stats.floored_iterations > 0 {
        eprintln!(
            "train-plda: warning: within-covariance eigenvalue floor fired in {} iteration(s)",
            stats.floored_iterations
        );
    }
    let lls = &stats.log_likelihoods;
    eprintln!(
        "train-plda: {} speakers, {} vectors, dim {} -> {}, log-likelihood {:.2} -> {:.2}",
        set.n_speakers(),
        set.vectors.len(),
        set.vectors.first().map(|v| v.len()).unwrap_or(0),
        pre.output_dim(),
        lls.first().copied().unwrap_or(f64::NAN),
        lls.last().copied().unwrap_or(f64::NAN),
    );

    let mut c = Container::new();
    c.set_meta("kind", "plda");
    c.set_meta("seed", seed);
    c.set_meta(
        "log_likelihoods",
        lls.iter()
            .map(|x| format!("{x:.6}"))
            .collect::<Vec<_>>()
            .join(","),
    );
    model.write_into(&mut c);
    write_preprocessor(&mut c, &pre);
    let path = arts.plda_model();
    c.save(&path)?;
    write_manifest(
        &path,
        "train-plda",
        seed,
        &cfg.snapshot(),
        &[("pseudo-labels".into(), hash_file(&arts.pseudo_labels())?)],
    )?;
    eprintln!("train-plda: model -> {}", path.display());
    Ok(())
}
