//! Synthetic clips and a brute-force LBP-TOP reference for testing `fmer`.
//!
//! Nothing here is tuned for speed. [`oracle_lbp_top`] is written from the
//! operator definition alone and must agree bit-for-bit with the engine.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use fmer::ingest::{frame_path, write_manifest, write_pgm, ClipManifestEntry, CoarseLabel, FrameSequence, RawEmotion};
use fmer::landmarks::LANDMARK_COUNT;
use fmer::Error;
use image::{GrayImage, Luma};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Pattern {
    /// Every pixel of every frame has the same value.
    ConstantVolume,
    /// Independent uniform bytes.
    RandomNoise,
    /// A vertical step edge that moves one column right per frame.
    MovingEdge,
    /// `num_per_class` clips per coarse class. Each class has its own stripe
    /// texture; the texture drifts `shift_magnitude` px per frame.
    SeparableClasses { num_per_class: usize, shift_magnitude: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthSpec {
    pub height: u32,
    pub width: u32,
    pub frames: usize,
    pub seed: u64,
    pub pattern: Pattern,
}

impl SynthSpec {
    pub fn new(height: u32, width: u32, frames: usize, seed: u64, pattern: Pattern) -> Self {
        SynthSpec {
            height,
            width,
            frames,
            seed,
            pattern,
        }
    }

    fn check(&self) {
        assert!(
            self.height >= 3 && self.width >= 3 && self.frames >= 3,
            "synthetic volumes need at least 3 px and 3 frames, got {}x{}x{}",
            self.height,
            self.width,
            self.frames
        );
    }

    /// Number of clips [`gen_sequences`] produces.
    pub fn clip_count(&self) -> usize {
        match self.pattern {
            Pattern::SeparableClasses { num_per_class, .. } => num_per_class * CoarseLabel::COUNT,
            _ => 1,
        }
    }
}

fn rng_for(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Label of clip `index` in a [`Pattern::SeparableClasses`] set.
pub fn class_of(index: usize) -> CoarseLabel {
    CoarseLabel::ALL[index % CoarseLabel::COUNT]
}

fn texture(label: CoarseLabel, x: i64, y: i64) -> bool {
    let v = match label {
        CoarseLabel::Negative => x.div_euclid(2),
        CoarseLabel::Positive => y.div_euclid(2),
        CoarseLabel::Surprise => x.div_euclid(2) + y.div_euclid(2),
        CoarseLabel::Others => (x + y).div_euclid(2),
    };
    v.rem_euclid(2) == 1
}

fn frames_for(spec: &SynthSpec, index: usize) -> (CoarseLabel, Vec<GrayImage>) {
    spec.check();
    let (w, h) = (spec.width, spec.height);
    let mut rng = rng_for(spec.seed, index as u64);
    match spec.pattern {
        Pattern::ConstantVolume => {
            let v: u8 = rng.gen();
            (CoarseLabel::Others, vec![GrayImage::from_pixel(w, h, Luma([v])); spec.frames])
        }
        Pattern::RandomNoise => {
            let frames = (0..spec.frames)
                .map(|_| GrayImage::from_fn(w, h, |_, _| Luma([rng.gen()])))
                .collect();
            (CoarseLabel::Others, frames)
        }
        Pattern::MovingEdge => {
            let start = rng.gen_range(0..w);
            let frames = (0..spec.frames)
                .map(|t| {
                    let edge = start + t as u32;
                    GrayImage::from_fn(w, h, |x, _| Luma([if x < edge { 200 } else { 40 }]))
                })
                .collect();
            (CoarseLabel::Others, frames)
        }
        Pattern::SeparableClasses { shift_magnitude, .. } => {
            let label = class_of(index);
            let phase_x = rng.gen_range(0..4i64);
            let phase_y = rng.gen_range(0..4i64);
            let base: i32 = rng.gen_range(50..90);
            let frames = (0..spec.frames)
                .map(|t| {
                    let dx = phase_x + i64::from(shift_magnitude) * t as i64;
                    GrayImage::from_fn(w, h, |x, y| {
                        let on = texture(label, x as i64 + dx, y as i64 + phase_y);
                        let noise: i32 = rng.gen_range(-8..=8);
                        let v = base + if on { 110 } else { 0 } + noise;
                        Luma([v.clamp(0, 255) as u8])
                    })
                })
                .collect();
            (label, frames)
        }
    }
}

/// Clip `index` of `spec` (the only clip for single-volume patterns).
pub fn gen_clip(spec: &SynthSpec, index: usize) -> FrameSequence {
    let (label, frames) = frames_for(spec, index);
    FrameSequence::new(clip_id(index), subject_id(index), label, frames).expect("valid synthetic clip")
}

/// The first clip of `spec`. Deterministic in `spec`.
///
/// # Panics
/// If any dimension is below 3.
pub fn gen_volume(spec: &SynthSpec) -> FrameSequence {
    gen_clip(spec, 0)
}

/// Every clip of `spec`, labels cycling through the four coarse classes.
pub fn gen_sequences(spec: &SynthSpec) -> Vec<FrameSequence> {
    (0..spec.clip_count()).map(|i| gen_clip(spec, i)).collect()
}

pub fn clip_id(index: usize) -> String {
    format!("syn{index:04}")
}

fn subject_id(index: usize) -> String {
    format!("sub{:02}", index % 5)
}

/// Raw counts from the brute-force reference, laid out
/// `(block_row, block_col, plane, bin)` with planes XY, XT, YT.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleResult {
    pub d: usize,
    pub counts: Vec<u32>,
}

impl OracleResult {
    pub fn get(&self, block_row: usize, block_col: usize, plane: usize, bin: usize) -> u32 {
        self.counts[((block_row * self.d + block_col) * 3 + plane) * 256 + bin]
    }

    pub fn plane_mass(&self, plane: usize) -> u64 {
        let mut total = 0u64;
        for br in 0..self.d {
            for bc in 0..self.d {
                for bin in 0..256 {
                    total += u64::from(self.get(br, bc, plane, bin));
                }
            }
        }
        total
    }
}

/// Clockwise ring from the top-left neighbour, as (row, column) offsets in a plane.
const RING: [(i64, i64); 8] = [(-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1)];

/// Reference LBP-TOP: for every block, every interior voxel inside it, and
/// every plane, threshold the eight plane neighbours against the centre.
///
/// Plane axes as (row, column): XY = (y, x), XT = (t, x), YT = (t, y).
pub fn oracle_lbp_top(seq: &FrameSequence, d: usize) -> Result<OracleResult, Error> {
    let (w, h, t_len) = (seq.width() as i64, seq.height() as i64, seq.len() as i64);
    if w < 3 || h < 3 || t_len < 3 {
        return Err(Error::TooSmall {
            width: seq.width(),
            height: seq.height(),
            frames: seq.len(),
        });
    }
    let px = |x: i64, y: i64, t: i64| -> u8 { seq.frames()[t as usize].get_pixel(x as u32, y as u32)[0] };
    let edge = |i: usize, dim: i64| (i as i64 * dim) / d as i64;
    let mut counts = vec![0u32; d * d * 3 * 256];
    for br in 0..d {
        for bc in 0..d {
            let (y_lo, y_hi) = (edge(br, h), edge(br + 1, h));
            let (x_lo, x_hi) = (edge(bc, w), edge(bc + 1, w));
            for t in 1..t_len - 1 {
                for y in y_lo.max(1)..y_hi.min(h - 1) {
                    for x in x_lo.max(1)..x_hi.min(w - 1) {
                        let centre = px(x, y, t);
                        for plane in 0..3 {
                            let mut code = 0usize;
                            for (bit, &(dr, dc)) in RING.iter().enumerate() {
                                let v = match plane {
                                    0 => px(x + dc, y + dr, t),
                                    1 => px(x + dc, y, t + dr),
                                    _ => px(x, y + dc, t + dr),
                                };
                                if v > centre {
                                    code += 1 << bit;
                                }
                            }
                            counts[((br * d + bc) * 3 + plane) * 256 + code] += 1;
                        }
                    }
                }
            }
        }
    }
    Ok(OracleResult { d, counts })
}

/// A plausible 68-point face filling most of a `width` x `height` frame.
/// Every standard region box is at least 3 px on each side for frames of 32 px or more.
pub fn synth_landmarks(height: u32, width: u32) -> Vec<(i64, i64)> {
    let mut pts: Vec<(f64, f64)> = Vec::with_capacity(LANDMARK_COUNT);
    for k in 0..17 {
        let u = (k as f64 - 8.0) / 8.0;
        pts.push((0.1 + 0.8 * k as f64 / 16.0, 0.35 + 0.6 * (1.0 - u * u)));
    }
    for side in [0.2, 0.58] {
        for k in 0..5 {
            let u = (k as f64 - 2.0) / 2.0;
            pts.push((side + 0.055 * k as f64, 0.25 - 0.03 * (1.0 - u * u)));
        }
    }
    for k in 0..4 {
        pts.push((0.5, 0.35 + 0.065 * k as f64));
    }
    for k in 0..5 {
        pts.push((0.42 + 0.04 * k as f64, 0.6));
    }
    for cx in [0.32, 0.68] {
        for k in 0..6 {
            let a = std::f64::consts::PI * (1.0 + k as f64 / 3.0);
            pts.push((cx + 0.07 * a.cos(), 0.35 + 0.03 * a.sin()));
        }
    }
    for (n, rx, ry) in [(12, 0.15, 0.06), (8, 0.1, 0.03)] {
        for k in 0..n {
            let a = std::f64::consts::PI * (1.0 + 2.0 * k as f64 / n as f64);
            pts.push((0.5 + rx * a.cos(), 0.75 + ry * a.sin()));
        }
    }
    debug_assert_eq!(pts.len(), LANDMARK_COUNT);
    let sx = f64::from(width - 1);
    let sy = f64::from(height - 1);
    pts.into_iter()
        .map(|(x, y)| ((x * sx).round() as i64, (y * sy).round() as i64))
        .collect()
}

/// A raw label that relabels to `label`.
pub fn raw_for(label: CoarseLabel) -> RawEmotion {
    match label {
        CoarseLabel::Negative => RawEmotion::Disgust,
        CoarseLabel::Positive => RawEmotion::Happiness,
        CoarseLabel::Surprise => RawEmotion::Surprise,
        CoarseLabel::Others => RawEmotion::Others,
    }
}

/// Paths of a dataset written by [`write_synthetic_dataset`].
#[derive(Debug, Clone)]
pub struct SynthDataset {
    pub root: PathBuf,
    pub manifest: PathBuf,
    pub landmarks_dir: PathBuf,
    pub entries: Vec<ClipManifestEntry>,
}

/// Writes every clip of `spec` as PGM frames under `root/frames/<clip_id>/`,
/// plus `root/manifest.csv` and `root/landmarks/<clip_id>.landmarks.txt`.
/// Frame files are numbered from 1.
pub fn write_synthetic_dataset(root: &Path, spec: &SynthSpec) -> io::Result<SynthDataset> {
    let landmarks_dir = root.join("landmarks");
    fs::create_dir_all(&landmarks_dir)?;
    let points = synth_landmarks(spec.height, spec.width);
    let sidecar: String = points.iter().map(|(x, y)| format!("{x} {y}\n")).collect();
    let mut entries = Vec::new();
    for i in 0..spec.clip_count() {
        let seq = gen_clip(spec, i);
        let rel = PathBuf::from("frames").join(&seq.clip_id);
        let dir = root.join(&rel);
        fs::create_dir_all(&dir)?;
        for (k, frame) in seq.frames().iter().enumerate() {
            write_pgm(&frame_path(&dir, k + 1, 3, "pgm"), frame).map_err(io::Error::other)?;
        }
        fs::write(landmarks_dir.join(format!("{}.landmarks.txt", seq.clip_id)), &sidecar)?;
        entries.push(ClipManifestEntry {
            clip_id: seq.clip_id.clone(),
            subject_id: seq.subject_id.clone(),
            frames_dir: rel,
            onset_idx: 1,
            apex_idx: seq.len().div_ceil(2),
            offset_idx: seq.len(),
            raw_label: raw_for(seq.label),
        });
    }
    let manifest = root.join("manifest.csv");
    write_manifest(&manifest, &entries).map_err(io::Error::other)?;
    Ok(SynthDataset {
        root: root.to_path_buf(),
        manifest,
        landmarks_dir,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_volume_is_flat() {
        let seq = gen_volume(&SynthSpec::new(10, 10, 4, 3, Pattern::ConstantVolume));
        let v = seq.frames()[0].get_pixel(0, 0)[0];
        assert!(seq.frames().iter().all(|f| f.pixels().all(|p| p[0] == v)));
    }

    #[test]
    fn same_seed_same_volume() {
        for pattern in [
            Pattern::RandomNoise,
            Pattern::MovingEdge,
            Pattern::SeparableClasses {
                num_per_class: 1,
                shift_magnitude: 1,
            },
        ] {
            let spec = SynthSpec::new(9, 11, 5, 77, pattern);
            assert_eq!(gen_sequences(&spec), gen_sequences(&spec));
        }
        let a = gen_volume(&SynthSpec::new(9, 11, 5, 1, Pattern::RandomNoise));
        let b = gen_volume(&SynthSpec::new(9, 11, 5, 2, Pattern::RandomNoise));
        assert_ne!(a, b);
    }

    #[test]
    fn moving_edge_changes_one_column() {
        let seq = gen_volume(&SynthSpec::new(6, 40, 8, 0, Pattern::MovingEdge));
        for pair in seq.frames().windows(2) {
            let changed: Vec<u32> = (0..40)
                .filter(|&x| (0..6).any(|y| pair[0].get_pixel(x, y) != pair[1].get_pixel(x, y)))
                .collect();
            assert!(changed.len() <= 1, "{changed:?}");
            if let Some(&x) = changed.first() {
                assert!((0..6).all(|y| pair[0].get_pixel(x, y) != pair[1].get_pixel(x, y)));
            }
        }
    }

    #[test]
    fn oracle_constant_volume_bin_zero() {
        let seq = gen_volume(&SynthSpec::new(12, 12, 5, 9, Pattern::ConstantVolume));
        let r = oracle_lbp_top(&seq, 5).unwrap();
        for br in 0..5 {
            for bc in 0..5 {
                for plane in 0..3 {
                    let total: u32 = (0..256).map(|b| r.get(br, bc, plane, b)).sum();
                    assert_eq!(r.get(br, bc, plane, 0), total);
                }
            }
        }
        assert_eq!(r.plane_mass(0), 10 * 10 * 3);
    }

    #[test]
    fn oracle_single_interior_voxel() {
        let seq = gen_volume(&SynthSpec::new(3, 3, 3, 4, Pattern::RandomNoise));
        let r = oracle_lbp_top(&seq, 5).unwrap();
        assert_eq!(r.counts.iter().map(|&c| u64::from(c)).sum::<u64>(), 3);
        for plane in 0..3 {
            assert_eq!(r.plane_mass(plane), 1);
        }
    }

    #[test]
    fn oracle_hand_computed_code() {
        // Centre 5; only the right-hand neighbour (bit 3) is brighter in XY.
        let mut frames = vec![GrayImage::from_pixel(3, 3, Luma([5])); 3];
        frames[1].put_pixel(2, 1, Luma([9]));
        // In XT the next frame's centre-row neighbours sit on the bottom row: bits 4, 5, 6.
        frames[2] = GrayImage::from_pixel(3, 3, Luma([1]));
        for x in 0..3 {
            frames[2].put_pixel(x, 1, Luma([7]));
        }
        let seq = FrameSequence::new("c", "s", CoarseLabel::Others, frames).unwrap();
        let r = oracle_lbp_top(&seq, 5).unwrap();
        // Edges for 3 px at d=5 are 0,0,1,1,2,3, so pixel 1 lies in block 3.
        assert_eq!(r.get(3, 3, 0, 1 << 3), 1);
        assert_eq!(r.get(3, 3, 1, (1 << 3) | (1 << 4) | (1 << 5) | (1 << 6)), 1);
        // YT: row t+1 is (y-1, y, y+1) at x=1 of frame 2 = (1, 7, 1): only bit 5.
        assert_eq!(r.get(3, 3, 2, 1 << 5), 1);
    }

    #[test]
    fn separable_labels_cycle() {
        let spec = SynthSpec::new(
            8,
            8,
            3,
            0,
            Pattern::SeparableClasses {
                num_per_class: 2,
                shift_magnitude: 1,
            },
        );
        let labels: Vec<_> = gen_sequences(&spec).iter().map(|s| s.label).collect();
        assert_eq!(labels.len(), 8);
        for c in CoarseLabel::ALL {
            assert_eq!(labels.iter().filter(|&&l| l == c).count(), 2);
        }
    }

    #[test]
    fn landmarks_inside_frame() {
        for (h, w) in [(32, 32), (48, 64), (120, 90)] {
            let pts = synth_landmarks(h, w);
            assert_eq!(pts.len(), LANDMARK_COUNT);
            assert!(pts.iter().all(|&(x, y)| x >= 0 && y >= 0 && x < i64::from(w) && y < i64::from(h)));
        }
    }

    #[test]
    fn dataset_round_trips_through_loader() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path();
        let spec = SynthSpec::new(
            32,
            32,
            4,
            5,
            Pattern::SeparableClasses {
                num_per_class: 1,
                shift_magnitude: 1,
            },
        );
        let ds = write_synthetic_dataset(dir, &spec).unwrap();
        let entries = fmer::ingest::load_manifest(&ds.manifest).unwrap();
        assert_eq!(entries.len(), 4);
        for (i, e) in entries.iter().enumerate() {
            let seq = fmer::ingest::load_sequence(e).unwrap();
            assert_eq!(seq, gen_clip(&spec, i));
        }
    }
}
