//! LBP codes, LBP-TOP block histograms and feature dumps.
//!
//! Run: `cargo run --release --example lbp_top_features`

use fmer::features::{lbp_code, lbp_top, lbp_top_raw, DivisionFactor, FeatureTable, Plane};
use fmer::ingest::CoarseLabel;
use fmer::landmarks::AreaSpec;
use fmer_testkit::{gen_volume, oracle_lbp_top, Pattern, SynthSpec};

fn main() -> fmer::Result<()> {
    // Neighbours strictly brighter than the centre set their bit, clockwise from top-left.
    let patch = [[9u8, 1, 9], [1, 5, 9], [1, 1, 1]];
    println!("code of {patch:?} = {:#010b}", lbp_code(&patch));

    let seq = gen_volume(&SynthSpec::new(48, 64, 10, 7, Pattern::MovingEdge));
    for d in [DivisionFactor::Five, DivisionFactor::Ten] {
        let raw = lbp_top_raw(&seq, d);
        let fv = raw.normalize();
        let oracle = oracle_lbp_top(&seq, d.get() as usize)?;
        println!(
            "d={d}: {} features, per-plane mass {:?}, matches brute force: {}",
            fv.len(),
            Plane::ALL.map(|p| raw.plane_total(p)),
            raw.counts == oracle.counts
        );
    }

    // Share of each plane's codes that differ from the flat code 0; the edge moves, so XT and YT see it too.
    let raw = lbp_top_raw(&seq, DivisionFactor::Five);
    for (p, plane) in Plane::ALL.into_iter().enumerate() {
        let flat: u64 = raw.counts.chunks(256).skip(p).step_by(3).map(|h| u64::from(h[0])).sum();
        let total = raw.plane_total(plane);
        println!("{plane:?}: {:.1}% of codes non-zero", 100.0 * (total - flat) as f64 / total as f64);
    }

    let dir = tempfile::tempdir().map_err(|e| fmer::Error::Validation(e.to_string()))?;
    let mut table = FeatureTable::new(AreaSpec::single(fmer::landmarks::RoiKind::WholeFace), DivisionFactor::Five);
    for (i, pattern) in [Pattern::RandomNoise, Pattern::MovingEdge, Pattern::ConstantVolume].into_iter().enumerate() {
        let clip = gen_volume(&SynthSpec::new(32, 32, 5, i as u64, pattern));
        table.push(&format!("clip{i}"), CoarseLabel::ALL[i], lbp_top(&clip, DivisionFactor::Five)?.as_slice())?;
    }
    let bin = dir.path().join("features.fmef");
    let csv = dir.path().join("features.csv");
    table.write_binary(&bin)?;
    table.write_csv(&csv)?;
    let back = FeatureTable::read_binary(&bin)?;
    println!(
        "\nwrote {} rows x {} features: binary {} bytes, csv {} bytes, round trip equal: {}",
        table.len(),
        table.dim,
        std::fs::metadata(&bin).map(|m| m.len()).unwrap_or(0),
        std::fs::metadata(&csv).map(|m| m.len()).unwrap_or(0),
        back == table
    );
    Ok(())
}
