//! Accuracy, confusion matrices, one-vs-rest ROC curves and feature
//! extraction cost.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{extract_area, load_clip, DivisionFactor};
use crate::ingest::{ClipManifestEntry, CoarseLabel, FrameSequence, LoadOptions};
use crate::landmarks::{AreaSpec, LandmarkSet, RoiGeometry};
use crate::models::{LabeledDataset, TrainedModel};

const CLASSES: usize = CoarseLabel::COUNT;

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a == 0 || b == 0 {
        return Err(Error::EmptyInput);
    }
    if a != b {
        return Err(Error::DimensionMismatch {
            expected: format!("{a} labels"),
            found: b.to_string(),
        });
    }
    Ok(())
}

pub fn accuracy(preds: &[CoarseLabel], truths: &[CoarseLabel]) -> Result<f64> {
    check_lengths(preds.len(), truths.len())?;
    let correct = preds.iter().zip(truths).filter(|(p, t)| p == t).count();
    Ok(correct as f64 / preds.len() as f64)
}

/// Rows are the true class, columns the predicted class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix(pub [[u64; CLASSES]; CLASSES]);

impl ConfusionMatrix {
    pub fn get(&self, truth: CoarseLabel, pred: CoarseLabel) -> u64 {
        self.0[truth.index()][pred.index()]
    }

    pub fn total(&self) -> u64 {
        self.0.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..CLASSES).map(|i| self.0[i][i]).sum()
    }

    pub fn support(&self) -> [u64; CLASSES] {
        self.0.map(|row| row.iter().sum())
    }

    pub fn accuracy(&self) -> f64 {
        self.trace() as f64 / self.total() as f64
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("true\\pred");
        for c in CoarseLabel::ALL {
            out.push(',');
            out.push_str(c.as_str());
        }
        out.push('\n');
        for c in CoarseLabel::ALL {
            out.push_str(c.as_str());
            for v in self.0[c.index()] {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }
}

pub fn confusion(preds: &[CoarseLabel], truths: &[CoarseLabel]) -> Result<ConfusionMatrix> {
    check_lengths(preds.len(), truths.len())?;
    let mut m = ConfusionMatrix::default();
    for (p, t) in preds.iter().zip(truths) {
        m.0[t.index()][p.index()] += 1;
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub class: CoarseLabel,
    pub points: Vec<RocPoint>,
    /// `None` when the class has no positives or no negatives.
    pub auc: Option<f64>,
}

/// ROC points for "score >= threshold means positive", sweeping `+inf`, every
/// distinct score in descending order, then `-inf`.
pub fn roc_points(scores: &[f64], positive: &[bool]) -> Vec<RocPoint> {
    let p = positive.iter().filter(|&&b| b).count() as f64;
    let n = positive.len() as f64 - p;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let rate = |count: f64, of: f64| if of > 0.0 { count / of } else { 0.0 };

    let mut points = vec![RocPoint {
        threshold: f64::INFINITY,
        fpr: 0.0,
        tpr: 0.0,
    }];
    let (mut tp, mut fp) = (0.0, 0.0);
    let mut k = 0;
    while k < order.len() {
        let threshold = scores[order[k]];
        while k < order.len() && scores[order[k]] == threshold {
            if positive[order[k]] {
                tp += 1.0;
            } else {
                fp += 1.0;
            }
            k += 1;
        }
        points.push(RocPoint {
            threshold,
            fpr: rate(fp, n),
            tpr: rate(tp, p),
        });
    }
    points.push(RocPoint {
        threshold: f64::NEG_INFINITY,
        fpr: 1.0,
        tpr: 1.0,
    });
    points
}

/// Rank-statistic AUC with mid-ranks for ties. `None` if either side is empty.
pub fn auc(scores: &[f64], positive: &[bool]) -> Option<f64> {
    let n_pos = positive.iter().filter(|&&b| b).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut k = 0;
    while k < order.len() {
        let mut end = k;
        while end + 1 < order.len() && scores[order[end + 1]] == scores[order[k]] {
            end += 1;
        }
        // 1-based ranks k+1..=end+1 share their mean
        let mid = (k + end) as f64 / 2.0 + 1.0;
        rank_sum += mid * order[k..=end].iter().filter(|&&i| positive[i]).count() as f64;
        k = end + 1;
    }
    let (p, n) = (n_pos as f64, n_neg as f64);
    Some((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocReport {
    pub curves: Vec<RocCurve>,
    /// Unweighted mean over classes whose AUC is defined.
    pub macro_auc: Option<f64>,
    /// Classes without both positives and negatives, left out of the mean.
    pub degenerate: Vec<CoarseLabel>,
}

pub fn roc_ovr(scores: &[[f64; CLASSES]], truths: &[CoarseLabel]) -> Result<RocReport> {
    check_lengths(scores.len(), truths.len())?;
    if scores.len() < 2 {
        return Err(Error::Validation("ROC needs at least two samples".into()));
    }
    let mut curves = Vec::with_capacity(CLASSES);
    let mut degenerate = Vec::new();
    for class in CoarseLabel::ALL {
        let column: Vec<f64> = scores.iter().map(|s| s[class.index()]).collect();
        let positive: Vec<bool> = truths.iter().map(|&t| t == class).collect();
        let area = auc(&column, &positive);
        if area.is_none() {
            degenerate.push(class);
        }
        curves.push(RocCurve {
            class,
            points: roc_points(&column, &positive),
            auc: area,
        });
    }
    let defined: Vec<f64> = curves.iter().filter_map(|c| c.auc).collect();
    let macro_auc = (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64);
    Ok(RocReport {
        curves,
        macro_auc,
        degenerate,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub model: String,
    pub area: String,
    pub division: u32,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub confusion: ConfusionMatrix,
    pub roc: RocReport,
    pub meta: ReportMeta,
    pub cc_seconds: Option<f64>,
}

/// Predicts every row of `test` and collects the metrics.
pub fn evaluate(model: &TrainedModel, test: &LabeledDataset, meta: ReportMeta) -> Result<EvalReport> {
    let mut scores = Vec::with_capacity(test.len());
    let mut preds = Vec::with_capacity(test.len());
    for i in 0..test.len() {
        let s = model.predict_scores(test.row(i))?;
        preds.push(CoarseLabel::ALL[crate::models::argmax(&s)]);
        scores.push(s);
    }
    let confusion = confusion(&preds, &test.labels)?;
    Ok(EvalReport {
        accuracy: confusion.accuracy(),
        confusion,
        roc: roc_ovr(&scores, &test.labels)?,
        meta,
        cc_seconds: None,
    })
}

#[derive(Serialize)]
struct PerClassAuc {
    #[serde(rename = "Negative")]
    negative: Option<f64>,
    #[serde(rename = "Positive")]
    positive: Option<f64>,
    #[serde(rename = "Surprise")]
    surprise: Option<f64>,
    #[serde(rename = "Others")]
    others: Option<f64>,
}

#[derive(Serialize)]
struct Summary<'a> {
    accuracy: f64,
    macro_auc: Option<f64>,
    per_class_auc: PerClassAuc,
    confusion: &'a [[u64; CLASSES]; CLASSES],
    model: &'a str,
    area: &'a str,
    division: u32,
    seed: u64,
    cc_seconds: Option<f64>,
}

impl EvalReport {
    pub fn summary_json(&self) -> String {
        let auc = |c: CoarseLabel| self.roc.curves.iter().find(|r| r.class == c).and_then(|r| r.auc);
        let summary = Summary {
            accuracy: self.accuracy,
            macro_auc: self.roc.macro_auc,
            per_class_auc: PerClassAuc {
                negative: auc(CoarseLabel::Negative),
                positive: auc(CoarseLabel::Positive),
                surprise: auc(CoarseLabel::Surprise),
                others: auc(CoarseLabel::Others),
            },
            confusion: &self.confusion.0,
            model: &self.meta.model,
            area: &self.meta.area,
            division: self.meta.division,
            seed: self.meta.seed,
            cc_seconds: self.cc_seconds,
        };
        let mut text = serde_json::to_string_pretty(&summary).expect("summary serialises");
        text.push('\n');
        text
    }
}

fn roc_csv(curve: &RocCurve) -> String {
    let mut out = String::from("threshold,fpr,tpr\n");
    for p in &curve.points {
        let _ = writeln!(out, "{},{},{}", p.threshold, p.fpr, p.tpr);
    }
    out
}

fn roc_svg(report: &RocReport) -> String {
    const SIZE: f64 = 400.0;
    const PAD: f64 = 40.0;
    const COLORS: [&str; CLASSES] = ["#d62728", "#2ca02c", "#1f77b4", "#7f7f7f"];
    let span = SIZE - 2.0 * PAD;
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SIZE}\" height=\"{SIZE}\" viewBox=\"0 0 {SIZE} {SIZE}\">\n\
         <rect x=\"{PAD}\" y=\"{PAD}\" width=\"{span}\" height=\"{span}\" fill=\"none\" stroke=\"black\"/>\n\
         <line x1=\"{PAD}\" y1=\"{}\" x2=\"{}\" y2=\"{PAD}\" stroke=\"#bbbbbb\" stroke-dasharray=\"4 4\"/>\n",
        SIZE - PAD,
        SIZE - PAD
    );
    for (i, curve) in report.curves.iter().enumerate() {
        let pts: Vec<String> = curve
            .points
            .iter()
            .map(|p| format!("{:.2},{:.2}", PAD + p.fpr * span, SIZE - PAD - p.tpr * span))
            .collect();
        let label = match curve.auc {
            Some(a) => format!("{} (AUC {a:.3})", curve.class),
            None => format!("{} (undefined)", curve.class),
        };
        let _ = writeln!(
            svg,
            "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"2\" points=\"{}\"/>\n\
             <text x=\"{}\" y=\"{}\" font-size=\"12\" fill=\"{}\">{label}</text>",
            COLORS[i],
            pts.join(" "),
            SIZE - PAD - 150.0,
            SIZE - PAD - 10.0 - 16.0 * (CLASSES - 1 - i) as f64,
            COLORS[i],
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Writes `roc_<class>.csv`, `confusion.csv`, `summary.json` and optionally
/// `roc.svg` into `out_dir`, returning the paths in that order.
pub fn emit_plots(report: &EvalReport, out_dir: impl AsRef<Path>, svg: bool) -> Result<Vec<PathBuf>> {
    let out_dir = out_dir.as_ref();
    if out_dir.as_os_str().is_empty() {
        return Err(Error::io(
            out_dir,
            std::io::Error::new(std::io::ErrorKind::InvalidInput, "empty output directory"),
        ));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut files: Vec<(PathBuf, String)> = report
        .roc
        .curves
        .iter()
        .map(|c| (out_dir.join(format!("roc_{}.csv", c.class)), roc_csv(c)))
        .collect();
    files.push((out_dir.join("confusion.csv"), report.confusion.to_csv()));
    files.push((out_dir.join("summary.json"), report.summary_json()));
    if svg {
        files.push((out_dir.join("roc.svg"), roc_svg(&report.roc)));
    }
    for (path, body) in &files {
        std::fs::write(path, body).map_err(|e| Error::io(path, e))?;
    }
    Ok(files.into_iter().map(|(p, _)| p).collect())
}

/// Mean wall-clock feature extraction time per clip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub area: AreaSpec,
    pub division: DivisionFactor,
    pub mean_seconds_per_sample: f64,
    pub samples: usize,
    pub repeats: usize,
    /// What the timer covers.
    pub timed: String,
}

static BENCH_LOCK: Mutex<()> = Mutex::new(());

/// Times [`extract_area`] on already-loaded clips, one thread, `repeats`
/// passes over all clips. Concurrent calls in one process are serialised.
pub fn bench_cc_loaded(
    clips: &[(FrameSequence, LandmarkSet)],
    area: &AreaSpec,
    d: DivisionFactor,
    repeats: usize,
    geometry: &RoiGeometry,
) -> Result<BenchRecord> {
    if clips.is_empty() {
        return Err(Error::EmptyInput);
    }
    if repeats == 0 {
        return Err(Error::Validation("repeats must be at least 1".into()));
    }
    let _guard = BENCH_LOCK.lock().unwrap_or_else(|p| p.into_inner());
    let mut elapsed = 0.0;
    let mut sink = 0.0f32;
    for _ in 0..repeats {
        for (seq, lm) in clips {
            let start = Instant::now();
            let fv = extract_area(seq, lm, area, d, geometry)?;
            elapsed += start.elapsed().as_secs_f64();
            sink += fv.as_slice()[0];
        }
    }
    std::hint::black_box(sink);
    let samples = clips.len();
    Ok(BenchRecord {
        area: area.clone(),
        division: d,
        mean_seconds_per_sample: (elapsed / (samples * repeats) as f64).max(f64::MIN_POSITIVE),
        samples,
        repeats,
        timed: "extract_area: ROI crop, LBP-TOP and normalisation; frame loading excluded".into(),
    })
}

/// Loads every clip (untimed) and benchmarks extraction.
pub fn bench_cc(
    entries: &[ClipManifestEntry],
    landmarks_dir: &Path,
    area: &AreaSpec,
    d: DivisionFactor,
    repeats: usize,
    geometry: &RoiGeometry,
    load: &LoadOptions,
) -> Result<BenchRecord> {
    if entries.is_empty() {
        return Err(Error::EmptyInput);
    }
    let clips = entries
        .iter()
        .map(|e| load_clip(e, landmarks_dir, load))
        .collect::<Result<Vec<_>>>()?;
    bench_cc_loaded(&clips, area, d, repeats, geometry)
}
