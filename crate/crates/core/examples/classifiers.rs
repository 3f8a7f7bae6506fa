//! Grid search and test accuracy for all four classifiers on synthetic textures.
//!
//! Run: `cargo run --release --example classifiers`

use fmer::features::{lbp_top, DivisionFactor};
use fmer::models::{grid_search_with, stratified_split, train_with, HyperGrid, LabeledDataset, ModelKind, SplitSpec, TrainOptions};
use fmer_testkit::{gen_sequences, Pattern, SynthSpec};

fn main() -> fmer::Result<()> {
    let spec = SynthSpec::new(24, 24, 6, 42, Pattern::SeparableClasses { num_per_class: 20, shift_magnitude: 1 });
    let seqs = gen_sequences(&spec);
    let rows = seqs
        .iter()
        .map(|s| lbp_top(s, DivisionFactor::Five).map(|f| f.into_vec()))
        .collect::<fmer::Result<Vec<_>>>()?;
    let labels: Vec<_> = seqs.iter().map(|s| s.label).collect();
    let ds = LabeledDataset::from_rows(&rows, &labels)?;
    let (train, test) = stratified_split(&ds, SplitSpec::default())?;
    println!("{} train / {} test rows, {} features", train.len(), test.len(), ds.dim);

    let grid = HyperGrid {
        knn_k: vec![1, 3, 5],
        rf_trees: vec![25, 50],
        rf_max_depth: vec![10],
        lsvm_strength: vec![0.01, 0.1],
        lr_ridge: vec![0.1, 1.0],
    };
    for standardize in [false, true] {
        println!("\nstandardize = {standardize}");
        let opts = TrainOptions { standardize };
        for kind in ModelKind::ALL {
            let search = grid_search_with(kind, &train, &grid, 3, 42, opts)?;
            let model = train_with(search.best, &train, 42, opts)?;
            let cv: Vec<String> = search.scores.iter().map(|(_, s)| format!("{s:.2}")).collect();
            println!(
                "  {kind:<4} cv [{}] best {:?} -> test accuracy {:.3}",
                cv.join(" "),
                search.best,
                model.accuracy_on(&test)?
            );
        }
    }
    Ok(())
}
