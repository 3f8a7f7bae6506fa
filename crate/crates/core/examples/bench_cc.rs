//! Per-sample extraction cost for every standard area at both grid sizes.
//!
//! Run: `cargo run --release --example bench_cc`

use fmer::eval::bench_cc_loaded;
use fmer::features::DivisionFactor;
use fmer::landmarks::{AreaSpec, LandmarkSet, RoiGeometry};
use fmer_testkit::{gen_sequences, synth_landmarks, Pattern, SynthSpec};

fn main() -> fmer::Result<()> {
    let spec = SynthSpec::new(160, 140, 24, 5, Pattern::SeparableClasses { num_per_class: 5, shift_magnitude: 1 });
    let clips = gen_sequences(&spec)
        .into_iter()
        .map(|s| LandmarkSet::new(&synth_landmarks(s.height(), s.width()), s.dims()).map(|lm| (s, lm)))
        .collect::<fmer::Result<Vec<_>>>()?;
    let geometry = RoiGeometry::default();
    println!("{} clips of {}x{}x{}", clips.len(), spec.width, spec.height, spec.frames);
    println!("{:<18} {:>12} {:>12}", "area", "CC d=5 (ms)", "CC d=10 (ms)");
    for area in AreaSpec::standard_areas() {
        let mut cells = Vec::new();
        for d in [DivisionFactor::Five, DivisionFactor::Ten] {
            let rec = bench_cc_loaded(&clips, &area, d, 3, &geometry)?;
            cells.push(format!("{:>12.3}", rec.mean_seconds_per_sample * 1e3));
        }
        println!("{:<18} {}", area.to_string(), cells.join(" "));
    }
    Ok(())
}
