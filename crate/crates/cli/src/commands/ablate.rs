//! `ablate`: runs the pipeline variants over the test split and emits a
//! DER table.

use crate::artifacts::{write_manifest, Artifacts};
use crate::config::RunConfig;
use anyhow::Result;
use undiar_core::audio::{energy_vad, regions_from_rttm};
use undiar_core::pipeline::{ablation_run, AblationInputs};

pub fn run(cfg: &RunConfig, loss_name: &str, vicreg_loss_name: Option<&str>) -> Result<()> {
    let seed = cfg.seed()?;
    let arts = Artifacts::new(cfg.path("artifact_dir")?);
    let model = arts.load_encoder(loss_name)?;
    let vicreg_model = match vicreg_loss_name {
        Some(name) => Some(arts.load_encoder(name)?),
        None => None,
    };
    let (plda_model, pre) = arts.load_plda()?;
    let scorer = plda_model.scorer();
    let threshold = arts.load_threshold()?;

    let test_dir = cfg.path("test_dir")?;
    let reference = crate::artifacts::load_reference(&test_dir)?;
    let vad = cfg.vad()?;
    let mut files = Vec::new();
    for path in crate::artifacts::list_wavs(&test_dir)? {
        let w = crate::artifacts::load_canonical(&path)?;
        let energy = energy_vad(&w, &vad);
        let oracle = regions_from_rttm(&reference, &w.source_id);
        files.push((w, energy, oracle));
    }

    let inputs = AblationInputs {
        model: &model,
        vicreg_model: vicreg_model.as_ref(),
        scorer: &scorer,
        preprocessor: &pre,
        threshold,
        reference: &reference,
        files: &files,
        hop_ms: cfg.inference_hop_ms()?,
        linkage: cfg.linkage()?,
        collar: cfg.collar()?,
    };
    let report = ablation_run(&inputs)?;

    println!("{:<44} {:>8}", "variant", "DER");
    for row in &report.rows {
        println!("{:<44} {:>7.3}%", row.name, row.der * 100.0);
    }

    arts.dir("reports")?;
    let path = arts.report("ablation.csv");
    std::fs::write(&path, report.to_csv())?;
    write_manifest(&path, "ablate", seed, &cfg.snapshot(), &[])?;
    eprintln!("ablate: report -> {}", path.display());
    Ok(())
}
