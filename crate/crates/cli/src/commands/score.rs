//! `score`: DER between a reference and a hypothesis RTTM.

use anyhow::{Context, Result};
use std::path::Path;
use undiar_core::score::{der, parse_rttm, speaker_confusion_only, DerReport};

pub struct ScoreArgs<'a> {
    pub reference: &'a Path,
    pub hypothesis: &'a Path,
    pub collar: f64,
    pub ignore_overlap: bool,
    pub confusion_only: bool,
    pub csv_out: Option<&'a Path>,
}

pub fn run(args: &ScoreArgs<'_>) -> Result<()> {
    let ref_text = std::fs::read_to_string(args.reference)
        .with_context(|| format!("cannot read reference {}", args.reference.display()))?;
    let hyp_text = std::fs::read_to_string(args.hypothesis)
        .with_context(|| format!("cannot read hypothesis {}", args.hypothesis.display()))?;
    let reference = parse_rttm(&ref_text)?;
    let hypothesis = parse_rttm(&hyp_text)?;

    let report = if args.confusion_only {
        speaker_confusion_only(&reference, &hypothesis, args.collar, args.ignore_overlap)?
    } else {
        der(&reference, &hypothesis, args.collar, args.ignore_overlap)?
    };

    print_report(&report, args.confusion_only);

    if let Some(path) = args.csv_out {
        std::fs::write(path, report_csv(&report))
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    Ok(())
}

fn print_report(report: &DerReport, confusion_only: bool) {
    println!("scored speaker time: {:.3} s", report.scored_time);
    if confusion_only {
        println!("confusion: {:.3} s", report.confusion);
        println!("SPEAKER-CONFUSION {:.3}%", report.confusion_rate() * 100.0);
        return;
    }
    println!(
        "missed: {:.3} s  false alarm: {:.3} s  confusion: {:.3} s",
        report.missed, report.false_alarm, report.confusion
    );
    for (file, f) in &report.per_file {
        let rate = if f.scored_time > 0.0 {
            f.error_time() / f.scored_time * 100.0
        } else {
            0.0
        };
        println!("  {file}: {rate:.3}%");
    }
    println!("DER {:.3}%", report.der() * 100.0);
}

fn report_csv(report: &DerReport) -> String {
    let mut out = String::from("file,scored_time,missed,false_alarm,confusion,der\n");
    for (file, f) in &report.per_file {
        let der = if f.scored_time > 0.0 {
            f.error_time() / f.scored_time
        } else {
            0.0
        };
        out.push_str(&format!(
            "{file},{:.6},{:.6},{:.6},{:.6},{der:.6}\n",
            f.scored_time, f.missed, f.false_alarm, f.confusion
        ));
    }
    out.push_str(&format!(
        "TOTAL,{:.6},{:.6},{:.6},{:.6},{:.6}\n",
        report.scored_time,
        report.missed,
        report.false_alarm,
        report.confusion,
        report.der()
    ));
    out
}
