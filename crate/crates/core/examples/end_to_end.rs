//! The full command-line pipeline on a synthetic dataset written to disk.
//!
//! Run: `cargo run --release --example end_to_end [work_dir]`
//!
//! Equivalent shell session:
//! `fmer pipeline --manifest <dir>/manifest.csv --landmarks-dir <dir>/landmarks --area eyebrow+lip --model rf --out <dir>/out`

use std::path::PathBuf;

use fmer_testkit::{write_synthetic_dataset, Pattern, SynthSpec};

fn main() -> fmer::Result<()> {
    let work = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("fmer-end-to-end"));
    let spec = SynthSpec::new(64, 64, 8, 21, Pattern::SeparableClasses { num_per_class: 8, shift_magnitude: 1 });
    let data = write_synthetic_dataset(&work.join("data"), &spec).map_err(|e| fmer::Error::Validation(e.to_string()))?;
    println!("wrote {} clips, manifest {}", data.entries.len(), data.manifest.display());

    let out = work.join("out");
    let (manifest, landmarks, out_str) = (
        data.manifest.to_string_lossy().into_owned(),
        data.landmarks_dir.to_string_lossy().into_owned(),
        out.to_string_lossy().into_owned(),
    );
    let common = ["--manifest", &manifest, "--landmarks-dir", &landmarks, "--out", &out_str, "--area", "eyebrow+lip"];
    let stages: [&[&str]; 3] = [&["pipeline", "--model", "rf", "--format", "both"], &["bench", "--repeats", "2"], &["eval", "--model", "rf", "--svg"]];
    for stage in stages {
        let mut args = vec!["fmer"];
        args.extend_from_slice(stage);
        args.extend_from_slice(&common);
        println!("\n$ {}", args[..stage.len() + 1].join(" "));
        for path in fmer::cli::run(&args)? {
            println!("  {}", path.display());
        }
    }
    let summary = std::fs::read_to_string(out.join("eval_rf").join("summary.json")).map_err(|e| fmer::Error::Validation(e.to_string()))?;
    println!("\nsummary.json:\n{summary}");
    Ok(())
}
