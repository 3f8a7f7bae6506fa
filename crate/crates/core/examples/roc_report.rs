//! Confusion matrix, one-vs-rest ROC curves and the report files.
//!
//! Run: `cargo run --release --example roc_report [out_dir]`

use std::path::PathBuf;

use fmer::eval::{auc, emit_plots, evaluate, ReportMeta};
use fmer::features::{lbp_top, DivisionFactor};
use fmer::models::{stratified_split, train, Hyperparams, LabeledDataset, SplitSpec};
use fmer_testkit::{gen_sequences, Pattern, SynthSpec};

fn main() -> fmer::Result<()> {
    println!("AUC of scores (0.9, 0.8, 0.4, 0.1) with labels (+, -, +, -): {:?}", auc(&[0.9, 0.8, 0.4, 0.1], &[true, false, true, false]));

    // Faint textures and heavy motion so the classifier makes some mistakes.
    let spec = SynthSpec::new(12, 12, 4, 9, Pattern::SeparableClasses { num_per_class: 15, shift_magnitude: 3 });
    let seqs = gen_sequences(&spec);
    let rows = seqs
        .iter()
        .map(|s| lbp_top(s, DivisionFactor::Ten).map(|f| f.into_vec()))
        .collect::<fmer::Result<Vec<_>>>()?;
    let labels: Vec<_> = seqs.iter().map(|s| s.label).collect();
    let ds = LabeledDataset::from_rows(&rows, &labels)?;
    let (tr, te) = stratified_split(&ds, SplitSpec { test_fraction: 0.4, seed: 3 })?;
    let model = train(Hyperparams::Knn { k: 5 }, &tr, 3)?;
    let report = evaluate(
        &model,
        &te,
        ReportMeta { model: "knn".into(), area: "whole".into(), division: 10, seed: 3 },
    )?;

    println!("\naccuracy {:.2}%", report.accuracy * 100.0);
    println!("confusion (rows = truth):\n{}", report.confusion.to_csv());
    for curve in &report.roc.curves {
        println!("{:<8} AUC {:?} over {} ROC points", curve.class.to_string(), curve.auc, curve.points.len());
    }
    println!("macro AUC {:?}", report.roc.macro_auc);

    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("fmer-roc-report"));
    for path in emit_plots(&report, &out, true)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}
