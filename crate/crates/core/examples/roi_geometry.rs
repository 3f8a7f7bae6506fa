//! Region boxes derived from 68 landmarks, and cropping a clip to each.
//!
//! Run: `cargo run --example roi_geometry`

use fmer::landmarks::{crop_sequence, AreaSpec, LandmarkSet, RoiGeometry, RoiKind};
use fmer_testkit::{gen_volume, synth_landmarks, Pattern, SynthSpec};

fn main() -> fmer::Result<()> {
    let seq = gen_volume(&SynthSpec::new(120, 100, 8, 1, Pattern::RandomNoise));
    let lm = LandmarkSet::new(&synth_landmarks(seq.height(), seq.width()), seq.dims())?;
    println!("frame {}x{}, face side {} px", seq.width(), seq.height(), lm.face_side());

    for margin in [0.0, 0.05, 0.15] {
        let geometry = RoiGeometry::with_margin(margin);
        println!("\nmargin {margin}:");
        for kind in RoiKind::ALL {
            let roi = geometry.roi_box(kind, &lm, seq.dims())?;
            let crop = crop_sequence(&seq, roi)?;
            println!(
                "  {:<8} x {:>3}..{:<3} y {:>3}..{:<3} -> {}x{}x{}",
                kind.as_str(),
                roi.x0,
                roi.x1,
                roi.y0,
                roi.y1,
                crop.width(),
                crop.height(),
                crop.len()
            );
        }
    }

    println!("\nstandard areas:");
    for area in AreaSpec::standard_areas() {
        println!("  {area}");
    }
    Ok(())
}
