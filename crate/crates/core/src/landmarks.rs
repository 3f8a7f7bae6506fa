//! 68-point landmark sets and the facial regions derived from them.
//!
//! Landmarks follow the usual 68-point layout: jaw 0..=16, eyebrows 17..=26,
//! nose 27..=35, eyes 36..=47, mouth 48..=67. They are read once, for the
//! onset frame, and the resulting boxes are applied to every frame of the clip.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::FrameSequence;

pub const LANDMARK_COUNT: usize = 68;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LandmarkSet {
    points: Vec<(u32, u32)>,
}

impl LandmarkSet {
    /// Validates count and bounds against a `(height, width)` frame.
    pub fn new(points: &[(i64, i64)], frame_dims: (u32, u32)) -> Result<Self> {
        if points.len() != LANDMARK_COUNT {
            return Err(Error::Validation(format!(
                "expected {LANDMARK_COUNT} landmarks, got {}",
                points.len()
            )));
        }
        let (height, width) = frame_dims;
        let points = points
            .iter()
            .enumerate()
            .map(|(index, &(x, y))| {
                if (0..i64::from(width)).contains(&x) && (0..i64::from(height)).contains(&y) {
                    Ok((x as u32, y as u32))
                } else {
                    Err(Error::OutOfBounds {
                        index,
                        x,
                        y,
                        width,
                        height,
                    })
                }
            })
            .collect::<Result<_>>()?;
        Ok(LandmarkSet { points })
    }

    pub fn points(&self) -> &[(u32, u32)] {
        &self.points
    }

    /// Inclusive `(min_x, min_y, max_x, max_y)` over the given indices.
    fn extent(&self, indices: impl IntoIterator<Item = usize>) -> (u32, u32, u32, u32) {
        indices.into_iter().map(|i| self.points[i]).fold(
            (u32::MAX, u32::MAX, 0, 0),
            |(x0, y0, x1, y1), (x, y)| (x0.min(x), y0.min(y), x1.max(x), y1.max(y)),
        )
    }

    /// Longer side of the bounding box of all landmarks.
    pub fn face_side(&self) -> u32 {
        let (x0, y0, x1, y1) = self.extent(0..LANDMARK_COUNT);
        (x1 - x0).max(y1 - y0)
    }
}

pub fn parse_landmarks(path: impl AsRef<Path>, frame_dims: (u32, u32)) -> Result<LandmarkSet> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_landmarks_str(&text, &path.display().to_string(), frame_dims)
}

/// Parses 68 lines of `x y`. Trailing blank lines are ignored.
pub fn parse_landmarks_str(text: &str, origin: &str, frame_dims: (u32, u32)) -> Result<LandmarkSet> {
    let parse_err = |line: usize, message: String| Error::Parse {
        origin: origin.to_string(),
        line,
        message,
    };
    let lines: Vec<&str> = text.trim_end().lines().collect();
    if lines.len() != LANDMARK_COUNT {
        return Err(parse_err(
            lines.len(),
            format!("expected {LANDMARK_COUNT} lines of `x y`, found {}", lines.len()),
        ));
    }
    let mut points = Vec::with_capacity(LANDMARK_COUNT);
    for (i, line) in lines.iter().enumerate() {
        let mut fields = line.split_whitespace().map(str::parse::<i64>);
        match (fields.next(), fields.next(), fields.next()) {
            (Some(Ok(x)), Some(Ok(y)), None) => points.push((x, y)),
            _ => return Err(parse_err(i + 1, format!("expected two integers, got {line:?}"))),
        }
    }
    LandmarkSet::new(&points, frame_dims)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RoiKind {
    #[serde(rename = "whole")]
    WholeFace,
    Eyebrow,
    Eye,
    Middle,
    Lip,
    Bottom,
}

impl RoiKind {
    pub const ALL: [RoiKind; 6] = [
        RoiKind::WholeFace,
        RoiKind::Eyebrow,
        RoiKind::Eye,
        RoiKind::Middle,
        RoiKind::Lip,
        RoiKind::Bottom,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RoiKind::WholeFace => "whole",
            RoiKind::Eyebrow => "eyebrow",
            RoiKind::Eye => "eye",
            RoiKind::Middle => "middle",
            RoiKind::Lip => "lip",
            RoiKind::Bottom => "bottom",
        }
    }
}

impl fmt::Display for RoiKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RoiKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RoiKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Usage(format!("unknown region {s:?}")))
    }
}

/// Half-open pixel rectangle `[x0, x1) x [y0, y1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RoiBox {
    pub x0: u32,
    pub y0: u32,
    pub x1: u32,
    pub y1: u32,
}

impl RoiBox {
    pub fn new(x0: u32, y0: u32, x1: u32, y1: u32) -> Self {
        RoiBox { x0, y0, x1, y1 }
    }

    pub fn full(frame_dims: (u32, u32)) -> Self {
        RoiBox::new(0, 0, frame_dims.1, frame_dims.0)
    }

    pub fn width(&self) -> u32 {
        self.x1.saturating_sub(self.x0)
    }

    pub fn height(&self) -> u32 {
        self.y1.saturating_sub(self.y0)
    }

    pub fn fits(&self, frame_dims: (u32, u32)) -> bool {
        self.x0 <= self.x1 && self.y0 <= self.y1 && self.x1 <= frame_dims.1 && self.y1 <= frame_dims.0
    }
}

/// Landmark index sets per region plus the box margin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoiGeometry {
    /// Margin added on every edge, as a fraction of [`LandmarkSet::face_side`].
    pub margin_frac: f64,
    pub eyebrow: Vec<usize>,
    pub eye: Vec<usize>,
    pub middle: Vec<usize>,
    pub lip: Vec<usize>,
    pub bottom: Vec<usize>,
}

impl Default for RoiGeometry {
    fn default() -> Self {
        RoiGeometry {
            margin_frac: 0.05,
            eyebrow: (17..=26).collect(),
            eye: (36..=47).collect(),
            middle: (27..=35).chain([1, 15]).collect(),
            lip: (48..=67).collect(),
            bottom: (3..=13).collect(),
        }
    }
}

impl RoiGeometry {
    pub fn with_margin(margin_frac: f64) -> Self {
        RoiGeometry {
            margin_frac,
            ..Default::default()
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let geometry: RoiGeometry =
            serde_json::from_str(&text).map_err(|e| Error::json(path.display(), e))?;
        geometry.validate()?;
        Ok(geometry)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.margin_frac.is_finite() && self.margin_frac >= 0.0) {
            return Err(Error::Validation(format!(
                "margin_frac must be a non-negative number, got {}",
                self.margin_frac
            )));
        }
        for kind in &RoiKind::ALL[1..] {
            let set = self.indices(*kind);
            if set.is_empty() || set.iter().any(|&i| i >= LANDMARK_COUNT) {
                return Err(Error::Validation(format!(
                    "region {kind} needs a non-empty set of indices below {LANDMARK_COUNT}"
                )));
            }
        }
        Ok(())
    }

    pub fn indices(&self, kind: RoiKind) -> &[usize] {
        match kind {
            RoiKind::WholeFace => &[],
            RoiKind::Eyebrow => &self.eyebrow,
            RoiKind::Eye => &self.eye,
            RoiKind::Middle => &self.middle,
            RoiKind::Lip => &self.lip,
            RoiKind::Bottom => &self.bottom,
        }
    }

    fn padded_box(&self, kind: RoiKind, lm: &LandmarkSet, frame_dims: (u32, u32)) -> RoiBox {
        let (height, width) = frame_dims;
        let margin = self.margin_frac * f64::from(lm.face_side());
        let (x0, y0, x1, y1) = lm.extent(self.indices(kind).iter().copied());
        let lo = |v: u32| (f64::from(v) - margin).floor().max(0.0) as u32;
        let hi = |v: u32, limit: u32| ((f64::from(v) + margin).ceil() as u32).min(limit);
        RoiBox::new(lo(x0), lo(y0), hi(x1, width), hi(y1, height))
    }

    /// Box for one region on a `(height, width)` frame.
    pub fn roi_box(&self, kind: RoiKind, lm: &LandmarkSet, frame_dims: (u32, u32)) -> Result<RoiBox> {
        let b = match kind {
            RoiKind::WholeFace => RoiBox::full(frame_dims),
            RoiKind::Bottom => {
                let lip = self.padded_box(RoiKind::Lip, lm, frame_dims);
                let mut b = self.padded_box(RoiKind::Bottom, lm, frame_dims);
                b.y0 = b.y0.max(lip.y1);
                b
            }
            _ => self.padded_box(kind, lm, frame_dims),
        };
        if b.width() < 3 || b.height() < 3 {
            return Err(Error::DegenerateRoi {
                region: kind.to_string(),
                width: b.width(),
                height: b.height(),
            });
        }
        Ok(b)
    }
}

/// Box for `kind` using the default index sets and the given margin.
pub fn roi_box(kind: RoiKind, lm: &LandmarkSet, frame_dims: (u32, u32), margin_frac: f64) -> Result<RoiBox> {
    RoiGeometry::with_margin(margin_frac).roi_box(kind, lm, frame_dims)
}

/// Crops every frame with the same box.
pub fn crop_sequence(seq: &FrameSequence, roi: RoiBox) -> Result<FrameSequence> {
    if !roi.fits(seq.dims()) {
        return Err(Error::DimensionMismatch {
            expected: format!("box inside {}x{}", seq.width(), seq.height()),
            found: format!("{roi:?}"),
        });
    }
    let frames = seq
        .frames()
        .iter()
        .map(|f| image::imageops::crop_imm(f, roi.x0, roi.y0, roi.width(), roi.height()).to_image())
        .collect();
    FrameSequence::new(&seq.clip_id, &seq.subject_id, seq.label, frames)
}

/// An ordered, duplicate-free list of regions whose features are concatenated.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AreaSpec(Vec<RoiKind>);

impl AreaSpec {
    pub fn new(kinds: Vec<RoiKind>) -> Result<Self> {
        if kinds.is_empty() {
            return Err(Error::Usage("area needs at least one region".into()));
        }
        for (i, k) in kinds.iter().enumerate() {
            if kinds[..i].contains(k) {
                return Err(Error::Usage(format!("region {k} listed twice")));
            }
        }
        if kinds.len() > 1 && kinds.contains(&RoiKind::WholeFace) {
            return Err(Error::Usage("whole face cannot be combined with other regions".into()));
        }
        Ok(AreaSpec(kinds))
    }

    pub fn single(kind: RoiKind) -> Self {
        AreaSpec(vec![kind])
    }

    pub fn kinds(&self) -> &[RoiKind] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The nine areas evaluated in the original study, in table order.
    pub fn standard_areas() -> Vec<AreaSpec> {
        use RoiKind::*;
        [
            &[WholeFace][..],
            &[Eyebrow],
            &[Eye],
            &[Middle],
            &[Lip],
            &[Bottom],
            &[Eyebrow, Eye],
            &[Eyebrow, Lip],
            &[Eyebrow, Eye, Lip],
        ]
        .iter()
        .map(|k| AreaSpec(k.to_vec()))
        .collect()
    }
}

impl fmt::Display for AreaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, k) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("+")?;
            }
            f.write_str(k.as_str())?;
        }
        Ok(())
    }
}

impl FromStr for AreaSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AreaSpec::new(s.split('+').map(str::parse).collect::<Result<_>>()?)
    }
}

impl Serialize for AreaSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for AreaSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::CoarseLabel;
    use image::GrayImage;
    use proptest::prelude::*;

    fn uniform_points(f: impl Fn(usize) -> (i64, i64)) -> Vec<(i64, i64)> {
        (0..LANDMARK_COUNT).map(f).collect()
    }

    /// Face bbox 300x200 at (20..320, 40..240); brows span x 80..=260, y 90..=110.
    fn brow_layout() -> LandmarkSet {
        let pts = uniform_points(|i| match i {
            0 => (20, 150),
            16 => (320, 150),
            8 => (170, 240),
            17..=26 => (80 + (i as i64 - 17) * 20, if i % 2 == 0 { 90 } else { 110 }),
            _ => (170, 150),
        });
        LandmarkSet::new(&pts, (280, 340)).unwrap()
    }

    #[test]
    fn parse_accepts_68_lines() {
        let text: String = (0..68).map(|i| format!("{} {}\n", i, i + 1)).collect();
        let lm = parse_landmarks_str(&text, "t", (280, 340)).unwrap();
        assert_eq!(lm.points().len(), 68);
        assert_eq!(lm.points()[5], (5, 6));
    }

    #[test]
    fn parse_rejects_67_lines() {
        let text: String = (0..67).map(|i| format!("{i} {i}\n")).collect();
        assert!(matches!(
            parse_landmarks_str(&text, "t", (280, 340)).unwrap_err(),
            Error::Parse { .. }
        ));
    }

    #[test]
    fn parse_rejects_garbage_line() {
        let mut text: String = (0..67).map(|i| format!("{i} {i}\n")).collect();
        text.push_str("1 2 3\n");
        assert!(matches!(
            parse_landmarks_str(&text, "t", (280, 340)).unwrap_err(),
            Error::Parse { line: 68, .. }
        ));
    }

    #[test]
    fn parse_rejects_out_of_frame_point() {
        let mut text: String = (0..67).map(|i| format!("{i} {i}\n")).collect();
        text.push_str("500 10\n");
        match parse_landmarks_str(&text, "t", (280, 340)).unwrap_err() {
            Error::OutOfBounds { index, x, y, .. } => assert_eq!((index, x, y), (67, 500, 10)),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn whole_face_is_full_frame() {
        let lm = brow_layout();
        assert_eq!(
            roi_box(RoiKind::WholeFace, &lm, (280, 340), 0.05).unwrap(),
            RoiBox::new(0, 0, 340, 280)
        );
    }

    #[test]
    fn eyebrow_box_gets_five_percent_margin() {
        let lm = brow_layout();
        assert_eq!(lm.face_side(), 300);
        // 0.05 * 300 = 15 px on every edge
        assert_eq!(
            roi_box(RoiKind::Eyebrow, &lm, (280, 340), 0.05).unwrap(),
            RoiBox::new(65, 75, 275, 125)
        );
    }

    #[test]
    fn box_is_clamped_to_frame() {
        let lm = brow_layout();
        let b = roi_box(RoiKind::Eyebrow, &lm, (280, 340), 0.5).unwrap();
        assert_eq!(b, RoiBox::new(0, 0, 340, 260));
    }

    #[test]
    fn collapsed_landmarks_are_degenerate() {
        let lm = LandmarkSet::new(&uniform_points(|_| (50, 50)), (100, 100)).unwrap();
        for kind in &RoiKind::ALL[1..] {
            assert!(matches!(
                roi_box(*kind, &lm, (100, 100), 0.05).unwrap_err(),
                Error::DegenerateRoi { .. }
            ));
        }
    }

    #[test]
    fn bottom_starts_below_lip() {
        let pts = uniform_points(|i| match i {
            0..=16 => (10 + 5 * i as i64, 40 + 3 * i.min(16 - i) as i64),
            48..=67 => (40 + (i as i64 - 48), 55 + (i as i64 % 3)),
            _ => (45, 30),
        });
        let lm = LandmarkSet::new(&pts, (100, 100)).unwrap();
        let geo = RoiGeometry::default();
        let lip = geo.roi_box(RoiKind::Lip, &lm, (100, 100)).unwrap();
        let bottom = geo.roi_box(RoiKind::Bottom, &lm, (100, 100)).unwrap();
        assert_eq!(bottom.y0, lip.y1);
    }

    #[test]
    fn geometry_json_round_trip() {
        let geo = RoiGeometry::default();
        let text = serde_json::to_string(&geo).unwrap();
        assert_eq!(serde_json::from_str::<RoiGeometry>(&text).unwrap(), geo);
        let bad = RoiGeometry {
            eye: vec![70],
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    fn ramp_sequence(t: usize, w: u32, h: u32) -> FrameSequence {
        let frames = (0..t)
            .map(|k| GrayImage::from_fn(w, h, |x, y| image::Luma([((x * 31 + y * 17 + k as u32 * 7) % 256) as u8])))
            .collect();
        FrameSequence::new("c", "s", CoarseLabel::Others, frames).unwrap()
    }

    #[test]
    fn crop_full_frame_is_identity() {
        let seq = ramp_sequence(4, 20, 15);
        assert_eq!(crop_sequence(&seq, RoiBox::full(seq.dims())).unwrap(), seq);
    }

    #[test]
    fn crop_propagates_shape() {
        let seq = ramp_sequence(5, 30, 30);
        let cropped = crop_sequence(&seq, RoiBox::new(10, 10, 20, 20)).unwrap();
        assert_eq!((cropped.len(), cropped.width(), cropped.height()), (5, 10, 10));
        assert_eq!(
            cropped.frames()[3].get_pixel(2, 4),
            seq.frames()[3].get_pixel(12, 14)
        );
    }

    #[test]
    fn crop_outside_frame_is_rejected() {
        let seq = ramp_sequence(3, 10, 10);
        assert!(crop_sequence(&seq, RoiBox::new(0, 0, 11, 5)).is_err());
    }

    proptest! {
        #[test]
        fn crop_composes(
            x0 in 0u32..10, y0 in 0u32..10, w in 8u32..20, h in 8u32..20,
            sx in 0u32..3, sy in 0u32..3, sw in 3u32..6, sh in 3u32..6,
        ) {
            let seq = ramp_sequence(3, 32, 32);
            let outer = RoiBox::new(x0, y0, x0 + w, y0 + h);
            let inner = RoiBox::new(sx, sy, sx + sw, sy + sh);
            let composed = RoiBox::new(x0 + sx, y0 + sy, x0 + sx + sw, y0 + sy + sh);
            let twice = crop_sequence(&crop_sequence(&seq, outer).unwrap(), inner).unwrap();
            prop_assert_eq!(twice, crop_sequence(&seq, composed).unwrap());
        }
    }

    #[test]
    fn area_parsing() {
        let area: AreaSpec = "eyebrow+eye+lip".parse().unwrap();
        assert_eq!(area.kinds(), &[RoiKind::Eyebrow, RoiKind::Eye, RoiKind::Lip]);
        assert_eq!(area.to_string(), "eyebrow+eye+lip");
        assert!("whole+lip".parse::<AreaSpec>().is_err());
        assert!("lip+lip".parse::<AreaSpec>().is_err());
        assert!("".parse::<AreaSpec>().is_err());
        assert!("nose".parse::<AreaSpec>().is_err());
        let names: Vec<String> = AreaSpec::standard_areas().iter().map(|a| a.to_string()).collect();
        assert_eq!(
            names,
            [
                "whole", "eyebrow", "eye", "middle", "lip", "bottom",
                "eyebrow+eye", "eyebrow+lip", "eyebrow+eye+lip"
            ]
        );
    }
}
