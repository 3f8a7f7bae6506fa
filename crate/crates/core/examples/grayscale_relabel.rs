//! Grayscale conversion and four-way relabeling of a manifest.
//!
//! Run: `cargo run --example grayscale_relabel`

use fmer::ingest::{luma, parse_manifest, relabel, relabel_with, to_grayscale, CoarseLabel, RawEmotion, RepressionPolicy};
use image::{Rgb, RgbImage};

fn main() -> fmer::Result<()> {
    for (name, rgb) in [("red", [255, 0, 0]), ("green", [0, 255, 0]), ("blue", [0, 0, 255]), ("grey", [90, 90, 90])] {
        println!("{name:>5} {rgb:?} -> {}", luma(rgb[0], rgb[1], rgb[2]));
    }
    let frame = RgbImage::from_fn(4, 2, |x, y| Rgb([(x * 60) as u8, (y * 120) as u8, 30]));
    let gray = to_grayscale(&frame);
    println!("4x2 gradient as grayscale: {:?}", gray.as_raw());

    println!();
    for raw in RawEmotion::ALL {
        let excluded = relabel_with(raw, RepressionPolicy::Exclude).map_or("excluded".to_string(), |l| l.to_string());
        println!("{:>10} -> {:<8} (with repression excluded: {excluded})", raw.as_str(), relabel(raw).to_string());
    }

    // A 255-clip manifest with CASME-II sized emotion counts.
    let counts = [
        ("happiness", 32),
        ("surprise", 28),
        ("disgust", 63),
        ("sadness", 4),
        ("fear", 2),
        ("repression", 27),
        ("others", 99),
    ];
    let mut text = String::from("clip_id,subject_id,frames_dir,onset,apex,offset,label\n");
    let mut n = 0;
    for (label, count) in counts {
        for _ in 0..count {
            text.push_str(&format!("clip{n},sub{:02},frames/clip{n},0,4,9,{label}\n", n % 26));
            n += 1;
        }
    }
    let entries = parse_manifest(&text, "inline", std::path::Path::new("."))?;
    let mut tally = [0usize; CoarseLabel::COUNT];
    for e in &entries {
        tally[relabel(e.raw_label).index()] += 1;
    }
    println!();
    println!("{} clips:", entries.len());
    for class in CoarseLabel::ALL {
        println!("  {class:<8} {}", tally[class.index()]);
    }
    Ok(())
}
