//! The four classifiers, stratified splitting, grid search and model files.
//!
//! Every model scores the classes in [`CoarseLabel::ALL`] order. Scores are
//! softmax probabilities (logistic regression), one-vs-rest margins (linear
//! SVM), tree-vote fractions (random forest) or neighbour-vote fractions
//! (k-nearest-neighbours).

pub mod forest;
pub mod knn;
pub mod logreg;
pub mod svm;

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureTable, ZScore};
use crate::ingest::CoarseLabel;
use crate::seed;

const CLASSES: usize = CoarseLabel::COUNT;

/// Epoch budget for the linear SVM.
pub const LSVM_EPOCHS: usize = 100;

/// Feature rows with labels, row-major `N x dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub dim: usize,
    pub features: Vec<f32>,
    pub labels: Vec<CoarseLabel>,
    pub clip_ids: Vec<String>,
}

impl LabeledDataset {
    pub fn new(dim: usize, features: Vec<f32>, labels: Vec<CoarseLabel>, clip_ids: Vec<String>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::EmptyInput);
        }
        if dim == 0 || features.len() != dim * labels.len() || clip_ids.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} rows of {dim} features with ids", labels.len()),
                found: format!("{} values, {} ids", features.len(), clip_ids.len()),
            });
        }
        Ok(LabeledDataset {
            dim,
            features,
            labels,
            clip_ids,
        })
    }

    /// Builds a dataset from per-row vectors, naming rows `r0, r1, ...`.
    pub fn from_rows(rows: &[Vec<f32>], labels: &[CoarseLabel]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: format!("rows of length {dim}"),
                found: "ragged rows".into(),
            });
        }
        Self::new(
            dim,
            rows.concat(),
            labels.to_vec(),
            (0..rows.len()).map(|i| format!("r{i}")).collect(),
        )
    }

    pub fn from_table(table: &FeatureTable) -> Result<Self> {
        Self::new(table.dim, table.values.clone(), table.labels.clone(), table.clip_ids.clone())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    pub(crate) fn value(&self, row: usize, feature: usize) -> f32 {
        self.features[row * self.dim + feature]
    }

    pub fn class_counts(&self) -> [usize; CLASSES] {
        let mut counts = [0; CLASSES];
        for l in &self.labels {
            counts[l.index()] += 1;
        }
        counts
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> LabeledDataset {
        LabeledDataset {
            dim: self.dim,
            features: indices.iter().flat_map(|&i| self.row(i).iter().copied()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            clip_ids: indices.iter().map(|&i| self.clip_ids[i].clone()).collect(),
        }
    }

    /// Rows whose clip id appears in `ids`, in the order of `ids`.
    pub fn select_ids(&self, ids: &[String]) -> Result<LabeledDataset> {
        let index: HashMap<&str, usize> = self
            .clip_ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), i))
            .collect();
        let rows = ids
            .iter()
            .map(|id| {
                index
                    .get(id.as_str())
                    .copied()
                    .ok_or_else(|| Error::Validation(format!("clip {id} has no feature row")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(self.subset(&rows))
    }

    fn map_rows(&self, f: impl Fn(&[f32]) -> Vec<f32>) -> LabeledDataset {
        LabeledDataset {
            dim: self.dim,
            features: (0..self.len()).flat_map(|i| f(self.row(i))).collect(),
            labels: self.labels.clone(),
            clip_ids: self.clip_ids.clone(),
        }
    }
}

/// Non-zero entries of each row, for linear models on sparse histograms.
pub(crate) struct SparseRows {
    pub dim: usize,
    offsets: Vec<usize>,
    index: Vec<u32>,
    value: Vec<f64>,
}

impl SparseRows {
    pub fn from_dataset(ds: &LabeledDataset) -> Self {
        let mut rows = SparseRows {
            dim: ds.dim,
            offsets: vec![0],
            index: Vec::new(),
            value: Vec::new(),
        };
        for i in 0..ds.len() {
            for (j, &v) in ds.row(i).iter().enumerate() {
                if v != 0.0 {
                    rows.index.push(j as u32);
                    rows.value.push(f64::from(v));
                }
            }
            rows.offsets.push(rows.index.len());
        }
        rows
    }

    fn range(&self, i: usize) -> std::ops::Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    pub fn dot(&self, i: usize, w: &[f64]) -> f64 {
        self.range(i)
            .map(|k| self.value[k] * w[self.index[k] as usize])
            .sum()
    }

    /// `out += alpha * x_i`
    pub fn axpy(&self, i: usize, alpha: f64, out: &mut [f64]) {
        for k in self.range(i) {
            out[self.index[k] as usize] += alpha * self.value[k];
        }
    }

    pub fn norm_sq(&self, i: usize) -> f64 {
        self.range(i).map(|k| self.value[k] * self.value[k]).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            test_fraction: 0.2,
            seed: 42,
        }
    }
}

/// Per class, `max(1, round(count * fraction))` rows go to the test side,
/// chosen by a seeded shuffle. Both sides keep the original row order.
pub fn stratified_split(ds: &LabeledDataset, spec: SplitSpec) -> Result<(LabeledDataset, LabeledDataset)> {
    let (train, test) = stratified_split_indices(&ds.labels, spec)?;
    Ok((ds.subset(&train), ds.subset(&test)))
}

pub fn stratified_split_indices(labels: &[CoarseLabel], spec: SplitSpec) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(spec.test_fraction > 0.0 && spec.test_fraction < 1.0) {
        return Err(Error::Validation(format!(
            "test fraction must lie strictly between 0 and 1, got {}",
            spec.test_fraction
        )));
    }
    if labels.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut is_test = vec![false; labels.len()];
    for class in CoarseLabel::ALL {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if members.is_empty() {
            continue;
        }
        if members.len() < 2 {
            return Err(Error::ClassTooSmall {
                class: class.to_string(),
                count: members.len(),
                required: 2,
            });
        }
        let n_test = ((members.len() as f64 * spec.test_fraction).round() as usize)
            .max(1)
            .min(members.len() - 1);
        members.shuffle(&mut seed::rng(spec.seed, "split", class.index() as u64));
        for &i in &members[..n_test] {
            is_test[i] = true;
        }
    }
    let (test, train): (Vec<usize>, Vec<usize>) = (0..labels.len()).partition(|&i| is_test[i]);
    Ok((train, test))
}

/// Assigns every row to one of `folds` folds, dealing each class round-robin
/// after a seeded shuffle.
pub fn stratified_folds(labels: &[CoarseLabel], folds: usize, run_seed: u64) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(Error::Validation(format!("need at least 2 folds, got {folds}")));
    }
    let mut assignment = vec![0; labels.len()];
    for class in CoarseLabel::ALL {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if members.is_empty() {
            continue;
        }
        if members.len() < folds {
            return Err(Error::ClassTooSmall {
                class: class.to_string(),
                count: members.len(),
                required: folds,
            });
        }
        members.shuffle(&mut seed::rng(run_seed, "folds", class.index() as u64));
        for (k, &i) in members.iter().enumerate() {
            assignment[i] = k % folds;
        }
    }
    Ok(assignment)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Lsvm,
    Lr,
    Rf,
    Knn,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::Lsvm, ModelKind::Lr, ModelKind::Rf, ModelKind::Knn];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Lsvm => "lsvm",
            ModelKind::Lr => "lr",
            ModelKind::Rf => "rf",
            ModelKind::Knn => "knn",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Usage(format!("unknown model {s:?} (expected lsvm, lr, rf or knn)")))
    }
}

/// One concrete hyperparameter setting; the variant fixes the model kind.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Hyperparams {
    Knn { k: usize },
    Rf { trees: usize, max_depth: usize },
    Lsvm { strength: f64, epochs: usize },
    Lr { ridge: f64 },
}

impl Hyperparams {
    pub fn kind(&self) -> ModelKind {
        match self {
            Hyperparams::Knn { .. } => ModelKind::Knn,
            Hyperparams::Rf { .. } => ModelKind::Rf,
            Hyperparams::Lsvm { .. } => ModelKind::Lsvm,
            Hyperparams::Lr { .. } => ModelKind::Lr,
        }
    }
}

/// Candidate values per model kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HyperGrid {
    pub knn_k: Vec<usize>,
    pub rf_trees: Vec<usize>,
    pub rf_max_depth: Vec<usize>,
    pub lsvm_strength: Vec<f64>,
    pub lr_ridge: Vec<f64>,
}

impl Default for HyperGrid {
    fn default() -> Self {
        HyperGrid {
            knn_k: vec![1, 3, 5, 7, 9],
            rf_trees: vec![25, 50, 100],
            rf_max_depth: vec![10, 14, 20],
            lsvm_strength: vec![0.01, 0.1, 1.0, 10.0],
            lr_ridge: vec![0.01, 0.1, 1.0],
        }
    }
}

impl HyperGrid {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let grid: HyperGrid = serde_json::from_str(&text).map_err(|e| Error::json(path.display(), e))?;
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        let lists = [
            ("knn_k", self.knn_k.is_empty() || self.knn_k.contains(&0)),
            ("rf_trees", self.rf_trees.is_empty() || self.rf_trees.contains(&0)),
            ("rf_max_depth", self.rf_max_depth.is_empty()),
            ("lsvm_strength", self.lsvm_strength.is_empty() || self.lsvm_strength.iter().any(|&s| s <= 0.0)),
            ("lr_ridge", self.lr_ridge.is_empty() || self.lr_ridge.iter().any(|&s| s < 0.0)),
        ];
        match lists.iter().find(|(_, bad)| *bad) {
            Some((name, _)) => Err(Error::Validation(format!("grid list {name} is empty or holds an invalid value"))),
            None => Ok(()),
        }
    }

    /// Grid points for `kind` in grid order (outer lists vary slowest).
    pub fn points(&self, kind: ModelKind) -> Vec<Hyperparams> {
        match kind {
            ModelKind::Knn => self.knn_k.iter().map(|&k| Hyperparams::Knn { k }).collect(),
            ModelKind::Rf => self
                .rf_trees
                .iter()
                .flat_map(|&trees| {
                    self.rf_max_depth
                        .iter()
                        .map(move |&max_depth| Hyperparams::Rf { trees, max_depth })
                })
                .collect(),
            ModelKind::Lsvm => self
                .lsvm_strength
                .iter()
                .map(|&strength| Hyperparams::Lsvm {
                    strength,
                    epochs: LSVM_EPOCHS,
                })
                .collect(),
            ModelKind::Lr => self.lr_ridge.iter().map(|&ridge| Hyperparams::Lr { ridge }).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearParams {
    /// `classes x dim`
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
}

impl LinearParams {
    fn scores(&self, row: &[f32]) -> [f64; CLASSES] {
        let mut out = [0f64; CLASSES];
        for (c, o) in out.iter_mut().enumerate() {
            *o = self.biases[c]
                + self.weights[c]
                    .iter()
                    .zip(row)
                    .map(|(w, &x)| w * f64::from(x))
                    .sum::<f64>();
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Parameters {
    Linear(LinearParams),
    Forest { trees: Vec<forest::Node> },
    Neighbors {
        features: Vec<Vec<f32>>,
        labels: Vec<CoarseLabel>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TrainOptions {
    /// Fit a per-feature z-score on the training rows and apply it before the model.
    pub standardize: bool,
}

/// A fitted classifier. Immutable once trained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub kind: ModelKind,
    pub class_order: Vec<CoarseLabel>,
    pub hyperparameters: Hyperparams,
    pub seed: u64,
    pub parameters: Parameters,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub standardizer: Option<ZScore>,
    pub dim: usize,
}

pub fn train(hyper: Hyperparams, ds: &LabeledDataset, run_seed: u64) -> Result<TrainedModel> {
    train_with(hyper, ds, run_seed, TrainOptions::default())
}

pub fn train_with(hyper: Hyperparams, ds: &LabeledDataset, run_seed: u64, opts: TrainOptions) -> Result<TrainedModel> {
    let present = ds.class_counts().iter().filter(|&&c| c > 0).count();
    if present < 2 {
        return Err(Error::DegenerateData("all training labels are identical".into()));
    }
    let standardizer = opts.standardize.then(|| ZScore::fit(&ds.features, ds.dim));
    let scaled;
    let ds = match &standardizer {
        Some(z) => {
            scaled = ds.map_rows(|r| z.apply(r));
            &scaled
        }
        None => ds,
    };
    let parameters = match hyper {
        Hyperparams::Knn { k } => {
            if k == 0 {
                return Err(Error::Validation("k must be at least 1".into()));
            }
            let (features, labels) = knn::store(ds);
            Parameters::Neighbors { features, labels }
        }
        Hyperparams::Rf { trees, max_depth } => {
            if trees == 0 {
                return Err(Error::Validation("forest needs at least one tree".into()));
            }
            Parameters::Forest {
                trees: forest::fit(ds, trees, max_depth, run_seed),
            }
        }
        Hyperparams::Lsvm { strength, epochs } => {
            if strength <= 0.0 {
                return Err(Error::Validation("SVM strength must be positive".into()));
            }
            Parameters::Linear(svm::fit(ds, CLASSES, strength, epochs, run_seed))
        }
        Hyperparams::Lr { ridge } => Parameters::Linear(logreg::fit(ds, CLASSES, ridge).0),
    };
    Ok(TrainedModel {
        kind: hyper.kind(),
        class_order: CoarseLabel::ALL.to_vec(),
        hyperparameters: hyper,
        seed: run_seed,
        parameters,
        standardizer,
        dim: ds.dim,
    })
}

/// Index of the largest score; ties go to the earliest class.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

impl TrainedModel {
    pub fn predict_scores(&self, row: &[f32]) -> Result<[f64; CLASSES]> {
        if row.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: format!("{} features", self.dim),
                found: row.len().to_string(),
            });
        }
        let scaled;
        let row = match &self.standardizer {
            Some(z) => {
                scaled = z.apply(row);
                &scaled[..]
            }
            None => row,
        };
        let mut scores = match (&self.parameters, self.hyperparameters) {
            (Parameters::Neighbors { features, labels }, Hyperparams::Knn { k }) => {
                knn::scores(features, labels, k, row)
            }
            (Parameters::Forest { trees }, _) => forest::scores(trees, row),
            (Parameters::Linear(p), _) => p.scores(row),
            _ => return Err(Error::Validation("model parameters do not match its kind".into())),
        };
        if self.kind == ModelKind::Lr {
            logreg::softmax_in_place(&mut scores);
        }
        Ok(scores)
    }

    pub fn predict(&self, row: &[f32]) -> Result<CoarseLabel> {
        let scores = self.predict_scores(row)?;
        Ok(CoarseLabel::ALL[argmax(&scores)])
    }

    pub fn accuracy_on(&self, ds: &LabeledDataset) -> Result<f64> {
        let mut correct = 0usize;
        for i in 0..ds.len() {
            if self.predict(ds.row(i))? == ds.labels[i] {
                correct += 1;
            }
        }
        Ok(correct as f64 / ds.len() as f64)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: TrainedModel = serde_json::from_str(text).map_err(|e| Error::json("model", e))?;
        model.check()?;
        Ok(model)
    }

    fn check(&self) -> Result<()> {
        let consistent = self.class_order == CoarseLabel::ALL
            && self.hyperparameters.kind() == self.kind
            && match (&self.parameters, self.kind) {
                (Parameters::Linear(p), ModelKind::Lr | ModelKind::Lsvm) => {
                    p.weights.len() == CLASSES
                        && p.biases.len() == CLASSES
                        && p.weights.iter().all(|w| w.len() == self.dim)
                }
                (Parameters::Forest { trees }, ModelKind::Rf) => !trees.is_empty(),
                (Parameters::Neighbors { features, labels }, ModelKind::Knn) => {
                    features.len() == labels.len() && features.iter().all(|f| f.len() == self.dim)
                }
                _ => false,
            };
        if consistent {
            Ok(())
        } else {
            Err(Error::Validation("model file is internally inconsistent".into()))
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Mean fold accuracy of one grid point under stratified k-fold.
pub fn cross_validate(hyper: Hyperparams, ds: &LabeledDataset, folds: usize, run_seed: u64) -> Result<f64> {
    cross_validate_with(hyper, ds, folds, run_seed, TrainOptions::default())
}

fn cross_validate_with(
    hyper: Hyperparams,
    ds: &LabeledDataset,
    folds: usize,
    run_seed: u64,
    opts: TrainOptions,
) -> Result<f64> {
    let assignment = stratified_folds(&ds.labels, folds, run_seed)?;
    let mut total = 0.0;
    for fold in 0..folds {
        let (held, kept): (Vec<usize>, Vec<usize>) = (0..ds.len()).partition(|&i| assignment[i] == fold);
        let model = train_with(hyper, &ds.subset(&kept), seed::derive(run_seed, "fold", fold as u64), opts)?;
        total += model.accuracy_on(&ds.subset(&held))?;
    }
    Ok(total / folds as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub best: Hyperparams,
    /// Mean fold accuracy per grid point, in grid order.
    pub scores: Vec<(Hyperparams, f64)>,
}

/// Picks the grid point with the highest mean stratified k-fold accuracy;
/// ties keep the earlier point.
pub fn grid_search(kind: ModelKind, ds: &LabeledDataset, grid: &HyperGrid, folds: usize, run_seed: u64) -> Result<GridResult> {
    grid_search_with(kind, ds, grid, folds, run_seed, TrainOptions::default())
}

pub fn grid_search_with(
    kind: ModelKind,
    ds: &LabeledDataset,
    grid: &HyperGrid,
    folds: usize,
    run_seed: u64,
    opts: TrainOptions,
) -> Result<GridResult> {
    let points = grid.points(kind);
    if points.is_empty() {
        return Err(Error::Validation(format!("grid for {kind} is empty")));
    }
    // Fail before spawning work if any class cannot fill every fold.
    stratified_folds(&ds.labels, folds, run_seed)?;
    let scores = points
        .par_iter()
        .map(|&p| cross_validate_with(p, ds, folds, run_seed, opts).map(|s| (p, s)))
        .collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for (i, (_, s)) in scores.iter().enumerate() {
        if *s > scores[best].1 {
            best = i;
        }
    }
    Ok(GridResult {
        best: scores[best].0,
        scores,
    })
}
