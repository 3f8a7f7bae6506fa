//! LBP and LBP-TOP block histograms.
//!
//! Codes use a 3x3 neighbourhood. Bit `i` is set when neighbour `i` is strictly
//! greater than the centre, with neighbours numbered clockwise from the
//! top-left corner:
//!
//! ```text
//! 0 1 2
//! 7 c 3
//! 6 5 4
//! ```
//!
//! For the temporal planes the patch rows are frames `t-1, t, t+1` and the
//! columns run along `x` (XT plane) or `y` (YT plane).
//!
//! A sequence is split into a `d x d` spatial grid. Every interior voxel adds
//! its XY, XT and YT codes to the three histograms of the block containing its
//! own `(x, y)`, summed over all interior frames. The flattened feature layout
//! is `(block_row, block_col, plane, bin)`, each histogram L1-normalised.

use std::fmt;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use image::GrayImage;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{load_sequence_with, ClipManifestEntry, CoarseLabel, FrameSequence, LoadOptions};
use crate::landmarks::{crop_sequence, parse_landmarks, AreaSpec, LandmarkSet, RoiGeometry};

pub const BINS: usize = 256;
pub const PLANES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub enum DivisionFactor {
    Five,
    Ten,
}

impl DivisionFactor {
    pub fn get(self) -> u32 {
        match self {
            DivisionFactor::Five => 5,
            DivisionFactor::Ten => 10,
        }
    }

    /// Features produced for one region: `d * d * 3 * 256`.
    pub fn features_per_roi(self) -> usize {
        let d = self.get() as usize;
        d * d * PLANES * BINS
    }
}

impl TryFrom<u32> for DivisionFactor {
    type Error = Error;

    fn try_from(d: u32) -> Result<Self> {
        match d {
            5 => Ok(DivisionFactor::Five),
            10 => Ok(DivisionFactor::Ten),
            other => Err(Error::Usage(format!("division factor must be 5 or 10, got {other}"))),
        }
    }
}

impl From<DivisionFactor> for u32 {
    fn from(d: DivisionFactor) -> u32 {
        d.get()
    }
}

impl fmt::Display for DivisionFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.get())
    }
}

impl std::str::FromStr for DivisionFactor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.parse::<u32>()
            .map_err(|_| Error::Usage(format!("division factor must be 5 or 10, got {s:?}")))?
            .try_into()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Plane {
    XY,
    XT,
    YT,
}

impl Plane {
    pub const ALL: [Plane; 3] = [Plane::XY, Plane::XT, Plane::YT];
}

/// Block edges `floor(i * dim / d)` along both axes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockGrid {
    pub d: DivisionFactor,
    pub row_edges: Vec<u32>,
    pub col_edges: Vec<u32>,
}

impl BlockGrid {
    pub fn new(d: DivisionFactor, height: u32, width: u32) -> Self {
        let edges = |dim: u32| -> Vec<u32> {
            let n = u64::from(d.get());
            (0..=n).map(|i| (i * u64::from(dim) / n) as u32).collect()
        };
        BlockGrid {
            d,
            row_edges: edges(height),
            col_edges: edges(width),
        }
    }

    /// Block index along one axis for each pixel coordinate `0..dim`.
    fn lookup(edges: &[u32]) -> Vec<usize> {
        let dim = *edges.last().unwrap_or(&0) as usize;
        let mut out = vec![0; dim];
        for (b, w) in edges.windows(2).enumerate() {
            out[w[0] as usize..w[1] as usize].fill(b);
        }
        out
    }
}

/// Basic LBP code of a row-major 3x3 patch.
#[inline]
pub fn lbp_code<P: PartialOrd + Copy>(patch: &[[P; 3]; 3]) -> u8 {
    let c = patch[1][1];
    let ring = [
        patch[0][0],
        patch[0][1],
        patch[0][2],
        patch[1][2],
        patch[2][2],
        patch[2][1],
        patch[2][0],
        patch[1][0],
    ];
    ring.iter()
        .enumerate()
        .fold(0u8, |code, (i, &n)| code | (u8::from(n > c) << i))
}

/// Bin counts (or ratios after normalisation) of a 256-code histogram.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram256(pub [u32; BINS]);

impl Histogram256 {
    pub fn total(&self) -> u64 {
        self.0.iter().map(|&c| u64::from(c)).sum()
    }

    pub fn normalized(&self) -> [f32; BINS] {
        let mut out = [0f32; BINS];
        normalize_into(&self.0, &mut out);
        out
    }
}

/// Spatial LBP histogram over all interior pixels of a single frame.
pub fn lbp_histogram(frame: &GrayImage) -> Result<Histogram256> {
    let (w, h) = (frame.width() as usize, frame.height() as usize);
    if w < 3 || h < 3 {
        return Err(Error::TooSmall {
            width: frame.width(),
            height: frame.height(),
            frames: 1,
        });
    }
    let px = frame.as_raw();
    let mut bins = [0u32; BINS];
    for y in 1..h - 1 {
        let (up, mid, down) = (&px[(y - 1) * w..y * w], &px[y * w..(y + 1) * w], &px[(y + 1) * w..(y + 2) * w]);
        for x in 1..w - 1 {
            let patch = [
                [up[x - 1], up[x], up[x + 1]],
                [mid[x - 1], mid[x], mid[x + 1]],
                [down[x - 1], down[x], down[x + 1]],
            ];
            bins[lbp_code(&patch) as usize] += 1;
        }
    }
    Ok(Histogram256(bins))
}

/// Raw LBP-TOP counts for one sequence, laid out `(block_row, block_col, plane, bin)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawHistograms {
    pub d: DivisionFactor,
    pub counts: Vec<u32>,
}

impl RawHistograms {
    fn zeros(d: DivisionFactor) -> Self {
        RawHistograms {
            d,
            counts: vec![0; d.features_per_roi()],
        }
    }

    pub fn histogram(&self, block_row: usize, block_col: usize, plane: Plane) -> &[u32] {
        let d = self.d.get() as usize;
        let start = ((block_row * d + block_col) * PLANES + plane as usize) * BINS;
        &self.counts[start..start + BINS]
    }

    /// Sum over all blocks of one plane's counts.
    pub fn plane_total(&self, plane: Plane) -> u64 {
        self.counts
            .chunks_exact(BINS)
            .skip(plane as usize)
            .step_by(PLANES)
            .flat_map(|h| h.iter())
            .map(|&c| u64::from(c))
            .sum()
    }

    pub fn normalize(&self) -> FeatureVector {
        normalize(&self.counts)
    }
}

/// Borrowed `T x H x W` volume, one row-major slice per frame.
#[derive(Debug, Clone)]
pub struct Volume<'a, P> {
    frames: Vec<&'a [P]>,
    width: usize,
    height: usize,
}

impl<'a, P> Volume<'a, P> {
    pub fn new(frames: Vec<&'a [P]>, width: usize, height: usize) -> Result<Self> {
        let too_small = || Error::TooSmall {
            width: width as u32,
            height: height as u32,
            frames: frames.len(),
        };
        if width < 3 || height < 3 || frames.len() < 3 {
            return Err(too_small());
        }
        if let Some(bad) = frames.iter().find(|f| f.len() != width * height) {
            return Err(Error::DimensionMismatch {
                expected: format!("{} pixels per frame", width * height),
                found: bad.len().to_string(),
            });
        }
        Ok(Volume { frames, width, height })
    }

    pub fn from_sequence(seq: &'a FrameSequence) -> Volume<'a, u8> {
        Volume {
            frames: seq.frames().iter().map(|f| f.as_raw().as_slice()).collect(),
            width: seq.width() as usize,
            height: seq.height() as usize,
        }
    }
}

impl<P: PartialOrd + Copy + Sync> Volume<'_, P> {
    /// Accumulates interior frame `t` into `counts`.
    fn accumulate_frame(&self, t: usize, rows: &[usize], cols: &[usize], d: usize, counts: &mut [u32]) {
        let w = self.width;
        let (prev, cur, next) = (self.frames[t - 1], self.frames[t], self.frames[t + 1]);
        for y in 1..self.height - 1 {
            let up = &cur[(y - 1) * w..y * w];
            let mid = &cur[y * w..(y + 1) * w];
            let down = &cur[(y + 1) * w..(y + 2) * w];
            let prev_mid = &prev[y * w..(y + 1) * w];
            let next_mid = &next[y * w..(y + 1) * w];
            let prev_up = &prev[(y - 1) * w..y * w];
            let prev_down = &prev[(y + 1) * w..(y + 2) * w];
            let next_up = &next[(y - 1) * w..y * w];
            let next_down = &next[(y + 1) * w..(y + 2) * w];
            let row_base = rows[y] * d;
            for x in 1..w - 1 {
                let base = (row_base + cols[x]) * PLANES * BINS;
                let xy = [
                    [up[x - 1], up[x], up[x + 1]],
                    [mid[x - 1], mid[x], mid[x + 1]],
                    [down[x - 1], down[x], down[x + 1]],
                ];
                let xt = [
                    [prev_mid[x - 1], prev_mid[x], prev_mid[x + 1]],
                    [mid[x - 1], mid[x], mid[x + 1]],
                    [next_mid[x - 1], next_mid[x], next_mid[x + 1]],
                ];
                let yt = [
                    [prev_up[x], prev_mid[x], prev_down[x]],
                    [up[x], mid[x], down[x]],
                    [next_up[x], next_mid[x], next_down[x]],
                ];
                counts[base + lbp_code(&xy) as usize] += 1;
                counts[base + BINS + lbp_code(&xt) as usize] += 1;
                counts[base + 2 * BINS + lbp_code(&yt) as usize] += 1;
            }
        }
    }

    fn block_lookups(&self, d: DivisionFactor) -> (Vec<usize>, Vec<usize>) {
        let grid = BlockGrid::new(d, self.height as u32, self.width as u32);
        (BlockGrid::lookup(&grid.row_edges), BlockGrid::lookup(&grid.col_edges))
    }

    pub fn lbp_top_raw(&self, d: DivisionFactor) -> RawHistograms {
        let (rows, cols) = self.block_lookups(d);
        let mut raw = RawHistograms::zeros(d);
        for t in 1..self.frames.len() - 1 {
            self.accumulate_frame(t, &rows, &cols, d.get() as usize, &mut raw.counts);
        }
        raw
    }

    /// Same counts as [`Volume::lbp_top_raw`], with frames spread over the
    /// current rayon pool. Integer addition makes the result independent of
    /// the split.
    pub fn lbp_top_raw_parallel(&self, d: DivisionFactor) -> RawHistograms {
        let (rows, cols) = self.block_lookups(d);
        let dd = d.get() as usize;
        let counts = (1..self.frames.len() - 1)
            .into_par_iter()
            .fold(
                || vec![0u32; d.features_per_roi()],
                |mut acc, t| {
                    self.accumulate_frame(t, &rows, &cols, dd, &mut acc);
                    acc
                },
            )
            .reduce(
                || vec![0u32; d.features_per_roi()],
                |mut a, b| {
                    a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                    a
                },
            );
        RawHistograms { d, counts }
    }
}

pub fn lbp_top_raw(seq: &FrameSequence, d: DivisionFactor) -> RawHistograms {
    Volume::<u8>::from_sequence(seq).lbp_top_raw(d)
}

/// Normalised LBP-TOP features of a whole sequence: `d * d * 3 * 256` values.
pub fn lbp_top(seq: &FrameSequence, d: DivisionFactor) -> Result<FeatureVector> {
    // FrameSequence already guarantees H, W, T >= 3.
    Ok(lbp_top_raw(seq, d).normalize())
}

/// Flattened feature values, each in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(pub Vec<f32>);

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f32> {
        self.0
    }
}

fn normalize_into(counts: &[u32], out: &mut [f32]) {
    let total: u64 = counts.iter().map(|&c| u64::from(c)).sum();
    if total == 0 {
        out.fill(0.0);
        return;
    }
    let total = total as f64;
    for (o, &c) in out.iter_mut().zip(counts) {
        *o = (f64::from(c) / total) as f32;
    }
}

/// L1-normalises every consecutive 256-bin histogram; empty ones stay zero.
pub fn normalize(raw: &[u32]) -> FeatureVector {
    assert_eq!(raw.len() % BINS, 0, "raw counts must be whole histograms");
    let mut out = vec![0f32; raw.len()];
    for (src, dst) in raw.chunks_exact(BINS).zip(out.chunks_exact_mut(BINS)) {
        normalize_into(src, dst);
    }
    FeatureVector(out)
}

/// Crops each region of `area`, extracts its features and concatenates them
/// in area order.
pub fn extract_area(
    seq: &FrameSequence,
    lm: &LandmarkSet,
    area: &AreaSpec,
    d: DivisionFactor,
    geometry: &RoiGeometry,
) -> Result<FeatureVector> {
    let mut values = Vec::with_capacity(area.len() * d.features_per_roi());
    for &kind in area.kinds() {
        let roi = geometry.roi_box(kind, lm, seq.dims())?;
        let cropped = crop_sequence(seq, roi)?;
        values.extend(lbp_top(&cropped, d)?.into_vec());
    }
    Ok(FeatureVector(values))
}

pub fn landmark_path(dir: &Path, clip_id: &str) -> PathBuf {
    dir.join(format!("{clip_id}.landmarks.txt"))
}

/// Loads a clip and the landmark sidecar for its onset frame.
pub fn load_clip(
    entry: &ClipManifestEntry,
    landmarks_dir: &Path,
    load: &LoadOptions,
) -> Result<(FrameSequence, LandmarkSet)> {
    let seq = load_sequence_with(entry, load)?;
    let path = landmark_path(landmarks_dir, &entry.clip_id);
    if !path.is_file() {
        return Err(Error::Validation(format!(
            "clip {}: landmark file {} not found",
            entry.clip_id,
            path.display()
        )));
    }
    let lm = parse_landmarks(&path, seq.dims())?;
    Ok((seq, lm))
}

#[derive(Debug, Clone)]
pub struct ExtractOptions {
    pub area: AreaSpec,
    pub division: DivisionFactor,
    pub geometry: RoiGeometry,
    pub load: LoadOptions,
    /// Worker threads; `0` uses all logical cores.
    pub jobs: usize,
}

/// Extracts features for every entry in manifest order, using `opts.jobs` workers.
pub fn extract_batch(
    entries: &[ClipManifestEntry],
    landmarks_dir: &Path,
    opts: &ExtractOptions,
) -> Result<FeatureTable> {
    if entries.is_empty() {
        return Err(Error::EmptyInput);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs)
        .build()
        .map_err(|e| Error::Usage(format!("cannot start {} workers: {e}", opts.jobs)))?;
    let rows: Vec<Result<(CoarseLabel, FeatureVector)>> = pool.install(|| {
        entries
            .par_iter()
            .map(|entry| {
                let (seq, lm) = load_clip(entry, landmarks_dir, &opts.load)?;
                let fv = extract_area(&seq, &lm, &opts.area, opts.division, &opts.geometry)?;
                Ok((seq.label, fv))
            })
            .collect()
    });
    let mut table = FeatureTable::new(opts.area.clone(), opts.division);
    for (entry, row) in entries.iter().zip(rows) {
        let (label, fv) = row?;
        table.push(&entry.clip_id, label, fv.as_slice())?;
    }
    Ok(table)
}

/// Per-feature z-score standardisation fitted on a training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZScore {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl ZScore {
    pub fn fit(rows: &[f32], dim: usize) -> Self {
        let n = (rows.len() / dim.max(1)).max(1) as f64;
        let mut mean = vec![0f64; dim];
        for row in rows.chunks_exact(dim) {
            mean.iter_mut().zip(row).for_each(|(m, &v)| *m += f64::from(v));
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0f64; dim];
        for row in rows.chunks_exact(dim) {
            for ((s, &v), m) in var.iter_mut().zip(row).zip(&mean) {
                *s += (f64::from(v) - m).powi(2);
            }
        }
        let std = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 1e-12 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        ZScore { mean, std }
    }

    pub fn apply(&self, row: &[f32]) -> Vec<f32> {
        row.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(&v, (m, s))| ((f64::from(v) - m) / s) as f32)
            .collect()
    }
}

const MAGIC: &[u8; 4] = b"FMEF";
const FORMAT_VERSION: u16 = 1;

/// Feature rows for a set of clips, all sharing one area and division factor.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub area: AreaSpec,
    pub division: DivisionFactor,
    pub dim: usize,
    pub clip_ids: Vec<String>,
    pub labels: Vec<CoarseLabel>,
    /// Row-major `clip_ids.len() x dim`.
    pub values: Vec<f32>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Descriptor {
    area: AreaSpec,
    division: DivisionFactor,
    dim: usize,
    rows: usize,
    layout: Vec<String>,
    clip_ids: Vec<String>,
    labels: Vec<CoarseLabel>,
}

impl FeatureTable {
    pub fn new(area: AreaSpec, division: DivisionFactor) -> Self {
        let dim = area.len() * division.features_per_roi();
        FeatureTable {
            area,
            division,
            dim,
            clip_ids: Vec::new(),
            labels: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn push(&mut self, clip_id: &str, label: CoarseLabel, row: &[f32]) -> Result<()> {
        if row.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: format!("{} features", self.dim),
                found: row.len().to_string(),
            });
        }
        self.clip_ids.push(clip_id.to_string());
        self.labels.push(label);
        self.values.extend_from_slice(row);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.clip_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clip_ids.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    /// CSV with header `clip_id,label,f0..f{N-1}`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        let io = |e| Error::io(path, e);
        write!(w, "clip_id,label").map_err(io)?;
        for i in 0..self.dim {
            write!(w, ",f{i}").map_err(io)?;
        }
        writeln!(w).map_err(io)?;
        for i in 0..self.len() {
            write!(w, "{},{}", self.clip_ids[i], self.labels[i]).map_err(io)?;
            for v in self.row(i) {
                write!(w, ",{v}").map_err(io)?;
            }
            writeln!(w).map_err(io)?;
        }
        w.flush().map_err(io)
    }

    pub fn read_csv(path: impl AsRef<Path>, area: AreaSpec, division: DivisionFactor) -> Result<Self> {
        let path = path.as_ref();
        let origin = path.display().to_string();
        let parse_err = |line: usize, message: String| Error::Parse {
            origin: origin.clone(),
            line,
            message,
        };
        let mut reader = csv::ReaderBuilder::new()
            .from_path(path)
            .map_err(|e| parse_err(0, e.to_string()))?;
        let mut table = FeatureTable::new(area, division);
        let header_len = reader.headers().map_err(|e| parse_err(1, e.to_string()))?.len();
        if header_len != table.dim + 2 {
            return Err(parse_err(
                1,
                format!("expected {} feature columns, found {}", table.dim, header_len.saturating_sub(2)),
            ));
        }
        for (i, record) in reader.records().enumerate() {
            let line = i + 2;
            let record = record.map_err(|e| parse_err(line, e.to_string()))?;
            let label = record[1].parse::<CoarseLabel>().map_err(|m| parse_err(line, m))?;
            let row = record
                .iter()
                .skip(2)
                .map(|v| v.parse::<f32>().map_err(|e| parse_err(line, format!("{v:?}: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            table.push(&record[0], label, &row)?;
        }
        Ok(table)
    }

    /// Binary dump: `FMEF`, u16 version, u32 descriptor length, JSON
    /// descriptor, then `rows * dim` little-endian f32 values.
    pub fn write_binary(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut bytes = Vec::with_capacity(self.values.len() * 4 + 1024);
        self.encode(&mut bytes);
        std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }

    pub fn encode(&self, out: &mut Vec<u8>) {
        let descriptor = Descriptor {
            area: self.area.clone(),
            division: self.division,
            dim: self.dim,
            rows: self.len(),
            layout: ["roi", "block_row", "block_col", "plane", "bin"]
                .map(String::from)
                .to_vec(),
            clip_ids: self.clip_ids.clone(),
            labels: self.labels.clone(),
        };
        let json = serde_json::to_vec(&descriptor).expect("descriptor serialises");
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(json.len() as u32).to_le_bytes());
        out.extend_from_slice(&json);
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }

    pub fn read_binary(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut bytes = Vec::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| Error::io(path, e))?;
        Self::decode(&bytes, &path.display().to_string())
    }

    pub fn decode(bytes: &[u8], origin: &str) -> Result<Self> {
        let bad = |message: &str| Error::Parse {
            origin: origin.to_string(),
            line: 0,
            message: message.to_string(),
        };
        if bytes.len() < 10 || &bytes[..4] != MAGIC {
            return Err(bad("not an FMEF feature file"));
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != FORMAT_VERSION {
            return Err(bad(&format!("unsupported version {version}")));
        }
        let len = u32::from_le_bytes(bytes[6..10].try_into().unwrap()) as usize;
        let json = bytes.get(10..10 + len).ok_or_else(|| bad("truncated descriptor"))?;
        let desc: Descriptor = serde_json::from_slice(json).map_err(|e| Error::json(origin, e))?;
        let body = &bytes[10 + len..];
        let expected = desc.dim * desc.rows;
        if desc.dim != desc.area.len() * desc.division.features_per_roi()
            || desc.clip_ids.len() != desc.rows
            || desc.labels.len() != desc.rows
            || body.len() != expected * 4
        {
            return Err(bad("descriptor does not match payload"));
        }
        let values = body
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(FeatureTable {
            area: desc.area,
            division: desc.division,
            dim: desc.dim,
            clip_ids: desc.clip_ids,
            labels: desc.labels,
            values,
        })
    }
}
