//! Clip manifests, frame loading and label mapping.
//!
//! A manifest is a UTF-8 CSV with header
//! `clip_id,subject_id,frames_dir,onset,apex,offset,label`. Relative
//! `frames_dir` values resolve against the manifest's own directory. Frames are
//! named `img<index>.pgm` (binary P5) or `img<index>.png`, with the index
//! zero-padded to [`LoadOptions::pad_width`] digits.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use image::{DynamicImage, GrayImage, RgbImage};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The seven emotion labels a source dataset annotates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RawEmotion {
    Happiness,
    Surprise,
    Disgust,
    Sadness,
    Fear,
    Repression,
    Others,
}

impl RawEmotion {
    pub const ALL: [RawEmotion; 7] = [
        RawEmotion::Happiness,
        RawEmotion::Surprise,
        RawEmotion::Disgust,
        RawEmotion::Sadness,
        RawEmotion::Fear,
        RawEmotion::Repression,
        RawEmotion::Others,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RawEmotion::Happiness => "happiness",
            RawEmotion::Surprise => "surprise",
            RawEmotion::Disgust => "disgust",
            RawEmotion::Sadness => "sadness",
            RawEmotion::Fear => "fear",
            RawEmotion::Repression => "repression",
            RawEmotion::Others => "others",
        }
    }
}

impl fmt::Display for RawEmotion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RawEmotion {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RawEmotion::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| format!("unknown emotion label {s:?}"))
    }
}

/// The four classification targets. The declaration order is the class order
/// used by every model, score vector and confusion matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CoarseLabel {
    Negative,
    Positive,
    Surprise,
    Others,
}

impl CoarseLabel {
    pub const ALL: [CoarseLabel; 4] = [
        CoarseLabel::Negative,
        CoarseLabel::Positive,
        CoarseLabel::Surprise,
        CoarseLabel::Others,
    ];
    pub const COUNT: usize = 4;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            CoarseLabel::Negative => "Negative",
            CoarseLabel::Positive => "Positive",
            CoarseLabel::Surprise => "Surprise",
            CoarseLabel::Others => "Others",
        }
    }
}

impl fmt::Display for CoarseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CoarseLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CoarseLabel::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown class {s:?}"))
    }
}

/// Where clips labelled `repression` go after coarse relabelling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RepressionPolicy {
    #[default]
    Others,
    Exclude,
}

/// Maps a raw emotion onto its coarse class, sending repression to `Others`.
pub fn relabel(raw: RawEmotion) -> CoarseLabel {
    match raw {
        RawEmotion::Disgust | RawEmotion::Sadness | RawEmotion::Fear => CoarseLabel::Negative,
        RawEmotion::Happiness => CoarseLabel::Positive,
        RawEmotion::Surprise => CoarseLabel::Surprise,
        RawEmotion::Others | RawEmotion::Repression => CoarseLabel::Others,
    }
}

/// Like [`relabel`], but `None` for repression under [`RepressionPolicy::Exclude`].
pub fn relabel_with(raw: RawEmotion, policy: RepressionPolicy) -> Option<CoarseLabel> {
    match (raw, policy) {
        (RawEmotion::Repression, RepressionPolicy::Exclude) => None,
        _ => Some(relabel(raw)),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClipManifestEntry {
    pub clip_id: String,
    pub subject_id: String,
    pub frames_dir: PathBuf,
    pub onset_idx: usize,
    pub apex_idx: usize,
    pub offset_idx: usize,
    pub raw_label: RawEmotion,
}

impl ClipManifestEntry {
    /// Number of frames from onset to offset inclusive.
    pub fn frame_count(&self) -> usize {
        self.offset_idx - self.onset_idx + 1
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.onset_idx <= self.apex_idx && self.apex_idx <= self.offset_idx) {
            return Err(Error::Validation(format!(
                "clip {}: expected onset <= apex <= offset, got {} / {} / {}",
                self.clip_id, self.onset_idx, self.apex_idx, self.offset_idx
            )));
        }
        if self.frame_count() < 3 {
            return Err(Error::Validation(format!(
                "clip {}: {} frames from onset to offset, at least 3 required",
                self.clip_id,
                self.frame_count()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Deserialize)]
struct ManifestRow {
    clip_id: String,
    subject_id: String,
    frames_dir: String,
    onset: i64,
    apex: i64,
    offset: i64,
    label: String,
}

const MANIFEST_HEADER: [&str; 7] = [
    "clip_id",
    "subject_id",
    "frames_dir",
    "onset",
    "apex",
    "offset",
    "label",
];

pub fn load_manifest(path: impl AsRef<Path>) -> Result<Vec<ClipManifestEntry>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or_else(|| Path::new(""));
    parse_manifest(&text, &path.display().to_string(), base)
}

/// Parses manifest text; `base` is the directory relative frame paths resolve against.
pub fn parse_manifest(text: &str, origin: &str, base: &Path) -> Result<Vec<ClipManifestEntry>> {
    let parse_err = |line: usize, message: String| Error::Parse {
        origin: origin.to_string(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    if header.iter().ne(MANIFEST_HEADER) {
        return Err(parse_err(
            1,
            format!("expected header {:?}", MANIFEST_HEADER.join(",")),
        ));
    }

    let mut entries = Vec::new();
    for (i, row) in reader.deserialize::<ManifestRow>().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| parse_err(line, e.to_string()))?;
        let index = |name: &str, v: i64| {
            usize::try_from(v).map_err(|_| parse_err(line, format!("{name} must be >= 0, got {v}")))
        };
        let raw_label = row
            .label
            .parse::<RawEmotion>()
            .map_err(|msg| parse_err(line, msg))?;
        let frames_dir = PathBuf::from(&row.frames_dir);
        let entry = ClipManifestEntry {
            frames_dir: if frames_dir.is_absolute() {
                frames_dir
            } else {
                base.join(frames_dir)
            },
            onset_idx: index("onset", row.onset)?,
            apex_idx: index("apex", row.apex)?,
            offset_idx: index("offset", row.offset)?,
            clip_id: row.clip_id,
            subject_id: row.subject_id,
            raw_label,
        };
        entry.validate()?;
        entries.push(entry);
    }
    Ok(entries)
}

/// Writes entries in manifest format. Frame directories are written as given.
pub fn write_manifest(path: impl AsRef<Path>, entries: &[ClipManifestEntry]) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("clip_id,subject_id,frames_dir,onset,apex,offset,label\n");
    for e in entries {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            e.clip_id,
            e.subject_id,
            e.frames_dir.display(),
            e.onset_idx,
            e.apex_idx,
            e.offset_idx,
            e.raw_label
        ));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// BT.601 luma with round-half-up, in exact integer arithmetic.
pub fn luma(r: u8, g: u8, b: u8) -> u8 {
    let weighted = 299 * u32::from(r) + 587 * u32::from(g) + 114 * u32::from(b);
    ((weighted + 500) / 1000).min(255) as u8
}

pub fn to_grayscale(rgb: &RgbImage) -> GrayImage {
    GrayImage::from_fn(rgb.width(), rgb.height(), |x, y| {
        let [r, g, b] = rgb.get_pixel(x, y).0;
        image::Luma([luma(r, g, b)])
    })
}

/// A clip from onset to offset, all frames grayscale with identical size.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    pub clip_id: String,
    pub subject_id: String,
    pub label: CoarseLabel,
    frames: Vec<GrayImage>,
}

impl FrameSequence {
    pub fn new(
        clip_id: impl Into<String>,
        subject_id: impl Into<String>,
        label: CoarseLabel,
        frames: Vec<GrayImage>,
    ) -> Result<Self> {
        let first = frames.first().ok_or(Error::EmptyInput)?;
        let dims = first.dimensions();
        if let Some(bad) = frames.iter().find(|f| f.dimensions() != dims) {
            return Err(Error::DimensionMismatch {
                expected: format!("{}x{}", dims.0, dims.1),
                found: format!("{}x{}", bad.width(), bad.height()),
            });
        }
        if frames.len() < 3 || dims.0 < 3 || dims.1 < 3 {
            return Err(Error::TooSmall {
                width: dims.0,
                height: dims.1,
                frames: frames.len(),
            });
        }
        Ok(FrameSequence {
            clip_id: clip_id.into(),
            subject_id: subject_id.into(),
            label,
            frames,
        })
    }

    pub fn frames(&self) -> &[GrayImage] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn width(&self) -> u32 {
        self.frames[0].width()
    }

    pub fn height(&self) -> u32 {
        self.frames[0].height()
    }

    /// `(height, width)`.
    pub fn dims(&self) -> (u32, u32) {
        (self.height(), self.width())
    }

    pub fn into_frames(self) -> Vec<GrayImage> {
        self.frames
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadOptions {
    /// Digits the frame index is zero-padded to in file names.
    pub pad_width: usize,
    pub repression: RepressionPolicy,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            pad_width: 3,
            repression: RepressionPolicy::Others,
        }
    }
}

pub fn frame_path(dir: &Path, index: usize, pad_width: usize, ext: &str) -> PathBuf {
    dir.join(format!("img{index:0pad_width$}.{ext}"))
}

pub fn load_frame(path: &Path) -> Result<GrayImage> {
    let img = image::open(path).map_err(|e| Error::Image {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    Ok(match img {
        DynamicImage::ImageLuma8(gray) => gray,
        DynamicImage::ImageRgb8(rgb) => to_grayscale(&rgb),
        other => to_grayscale(&other.to_rgb8()),
    })
}

pub fn load_sequence(entry: &ClipManifestEntry) -> Result<FrameSequence> {
    load_sequence_with(entry, &LoadOptions::default())
}

pub fn load_sequence_with(entry: &ClipManifestEntry, opts: &LoadOptions) -> Result<FrameSequence> {
    entry.validate()?;
    let label = relabel_with(entry.raw_label, opts.repression).ok_or_else(|| {
        Error::Validation(format!(
            "clip {} is labelled {} which the current policy excludes",
            entry.clip_id, entry.raw_label
        ))
    })?;
    let mut frames: Vec<GrayImage> = Vec::with_capacity(entry.frame_count());
    for index in entry.onset_idx..=entry.offset_idx {
        let pgm = frame_path(&entry.frames_dir, index, opts.pad_width, "pgm");
        let path = if pgm.is_file() {
            pgm
        } else {
            let png = frame_path(&entry.frames_dir, index, opts.pad_width, "png");
            if !png.is_file() {
                return Err(Error::MissingFrame { index, path: pgm });
            }
            png
        };
        let frame = load_frame(&path)?;
        if let Some(first) = frames.first() {
            if first.dimensions() != frame.dimensions() {
                return Err(Error::DimensionMismatch {
                    expected: format!("{}x{}", first.width(), first.height()),
                    found: format!("{}x{} ({})", frame.width(), frame.height(), path.display()),
                });
            }
        }
        frames.push(frame);
    }
    FrameSequence::new(&entry.clip_id, &entry.subject_id, label, frames)
}

/// Writes a grayscale frame as binary PGM (P5, maxval 255).
pub fn write_pgm(path: &Path, frame: &GrayImage) -> Result<()> {
    let mut bytes = format!("P5\n{} {}\n255\n", frame.width(), frame.height()).into_bytes();
    bytes.extend_from_slice(frame.as_raw());
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const HEADER: &str = "clip_id,subject_id,frames_dir,onset,apex,offset,label\n";

    fn manifest(rows: &str) -> Result<Vec<ClipManifestEntry>> {
        parse_manifest(&format!("{HEADER}{rows}"), "test", Path::new("/data"))
    }

    #[test]
    fn single_row_manifest() {
        let entries = manifest("EP02_01f,sub01,sub01/EP02_01f,46,59,86,happiness\n").unwrap();
        assert_eq!(entries.len(), 1);
        assert_eq!(entries[0].frame_count(), 41);
        assert_eq!(entries[0].frames_dir, Path::new("/data/sub01/EP02_01f"));
        assert_eq!(entries[0].raw_label, RawEmotion::Happiness);
    }

    #[test]
    fn inverted_indices_fail_validation() {
        let err = manifest("c,s,d,10,10,9,fear\n").unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
        let err = manifest("c,s,d,10,12,11,fear\n").unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
    }

    #[test]
    fn too_short_clip_fails_validation() {
        assert!(matches!(
            manifest("c,s,d,10,10,11,fear\n").unwrap_err(),
            Error::Validation(_)
        ));
    }

    #[test]
    fn malformed_row_reports_line() {
        let err = manifest("a,s,d,1,2,3,fear\nb,s,d,x,2,3,fear\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other}"),
        }
        let err = manifest("a,s,d,1,2,3,happy\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn wrong_header_is_rejected() {
        let err = parse_manifest("id,subject\n", "t", Path::new("")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn dataset_label_tally() {
        let counts = [
            (RawEmotion::Happiness, 32),
            (RawEmotion::Surprise, 28),
            (RawEmotion::Disgust, 63),
            (RawEmotion::Sadness, 4),
            (RawEmotion::Fear, 2),
            (RawEmotion::Repression, 27),
            (RawEmotion::Others, 99),
        ];
        let mut rows = String::new();
        let mut n = 0;
        for (emotion, count) in counts {
            for _ in 0..count {
                rows.push_str(&format!("c{n},s{},d,0,1,2,{emotion}\n", n % 26));
                n += 1;
            }
        }
        let entries = manifest(&rows).unwrap();
        assert_eq!(entries.len(), 255);
        for (emotion, count) in counts {
            assert_eq!(
                entries.iter().filter(|e| e.raw_label == emotion).count(),
                count
            );
        }
        let mut coarse = [0usize; 4];
        for e in &entries {
            coarse[relabel(e.raw_label).index()] += 1;
        }
        assert_eq!(coarse, [69, 32, 28, 126]);
    }

    #[test]
    fn relabel_table() {
        assert_eq!(relabel(RawEmotion::Disgust), CoarseLabel::Negative);
        assert_eq!(relabel(RawEmotion::Sadness), CoarseLabel::Negative);
        assert_eq!(relabel(RawEmotion::Fear), CoarseLabel::Negative);
        assert_eq!(relabel(RawEmotion::Happiness), CoarseLabel::Positive);
        assert_eq!(relabel(RawEmotion::Surprise), CoarseLabel::Surprise);
        assert_eq!(relabel(RawEmotion::Others), CoarseLabel::Others);
        assert_eq!(relabel(RawEmotion::Repression), CoarseLabel::Others);
        assert_eq!(
            relabel_with(RawEmotion::Repression, RepressionPolicy::Exclude),
            None
        );
        let mut image: Vec<_> = RawEmotion::ALL.into_iter().map(relabel).collect();
        image.sort();
        image.dedup();
        assert_eq!(image, CoarseLabel::ALL);
    }

    #[test]
    fn raw_emotion_parses_exactly_seven_names() {
        for e in RawEmotion::ALL {
            assert_eq!(e.as_str().parse::<RawEmotion>().unwrap(), e);
        }
        assert!("Happiness".parse::<RawEmotion>().is_err());
        assert!("sad".parse::<RawEmotion>().is_err());
    }

    #[test]
    fn grayscale_fixed_points() {
        assert_eq!(luma(255, 255, 255), 255);
        assert_eq!(luma(0, 0, 0), 0);
        // 0.299 * 255 = 76.245
        assert_eq!(luma(255, 0, 0), 76);
        // 0.587 * 255 = 149.685, 0.114 * 255 = 29.07
        assert_eq!(luma(0, 255, 0), 150);
        assert_eq!(luma(0, 0, 255), 29);
    }

    proptest! {
        #[test]
        fn grayscale_matches_float_formula(r: u8, g: u8, b: u8) {
            let exact = 0.299 * f64::from(r) + 0.587 * f64::from(g) + 0.114 * f64::from(b);
            let frac = exact - exact.floor();
            prop_assume!((frac - 0.5).abs() > 1e-9);
            prop_assert_eq!(f64::from(luma(r, g, b)), exact.round());
        }
    }

    fn write_frames(dir: &Path, range: std::ops::RangeInclusive<usize>, w: u32, h: u32) {
        for i in range {
            let frame = GrayImage::from_fn(w, h, |x, y| image::Luma([((x + y + i as u32) % 256) as u8]));
            write_pgm(&frame_path(dir, i, 3, "pgm"), &frame).unwrap();
        }
    }

    fn entry(dir: &Path, onset: usize, offset: usize) -> ClipManifestEntry {
        ClipManifestEntry {
            clip_id: "c".into(),
            subject_id: "s".into(),
            frames_dir: dir.to_path_buf(),
            onset_idx: onset,
            apex_idx: onset + 1,
            offset_idx: offset,
            raw_label: RawEmotion::Fear,
        }
    }

    #[test]
    fn load_sequence_reads_onset_to_offset() {
        let dir = tempfile::tempdir().unwrap();
        write_frames(dir.path(), 46..=86, 340, 280);
        let seq = load_sequence(&entry(dir.path(), 46, 86)).unwrap();
        assert_eq!((seq.len(), seq.height(), seq.width()), (41, 280, 340));
        assert_eq!(seq.label, CoarseLabel::Negative);
        assert_eq!(seq.frames()[0].get_pixel(1, 2).0[0], 49);
        let again = load_sequence(&entry(dir.path(), 46, 86)).unwrap();
        assert_eq!(seq, again);
    }

    #[test]
    fn missing_frame_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        write_frames(dir.path(), 46..=86, 8, 8);
        std::fs::remove_file(frame_path(dir.path(), 59, 3, "pgm")).unwrap();
        match load_sequence(&entry(dir.path(), 46, 86)).unwrap_err() {
            Error::MissingFrame { index, .. } => assert_eq!(index, 59),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn mismatched_frame_size_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        write_frames(dir.path(), 0..=4, 34, 28);
        let odd = GrayImage::new(34, 29);
        write_pgm(&frame_path(dir.path(), 2, 3, "pgm"), &odd).unwrap();
        assert!(matches!(
            load_sequence(&entry(dir.path(), 0, 4)).unwrap_err(),
            Error::DimensionMismatch { .. }
        ));
    }

    #[test]
    fn png_frames_are_converted() {
        let dir = tempfile::tempdir().unwrap();
        for i in 0..3 {
            let rgb = RgbImage::from_pixel(5, 4, image::Rgb([255, 0, 0]));
            rgb.save(frame_path(dir.path(), i, 3, "png")).unwrap();
        }
        let seq = load_sequence(&entry(dir.path(), 0, 2)).unwrap();
        assert!(seq.frames().iter().all(|f| f.pixels().all(|p| p.0[0] == 76)));
    }
}
