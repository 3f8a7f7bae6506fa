//! Command-line driver: one subcommand per pipeline stage plus `pipeline`.
//!
//! Every stage reads and writes plain files under `--out`, so stages can be
//! rerun independently. Settings resolve as flags, then the `--config` JSON
//! file, then built-in defaults.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{self, BenchRecord, ReportMeta};
use crate::features::{extract_batch, DivisionFactor, ExtractOptions, FeatureTable};
use crate::ingest::{load_manifest, relabel_with, ClipManifestEntry, CoarseLabel, LoadOptions, RepressionPolicy};
use crate::landmarks::{AreaSpec, RoiGeometry, RoiKind};
use crate::models::{
    grid_search_with, stratified_split_indices, train_with, HyperGrid, LabeledDataset, ModelKind, SplitSpec,
    TrainOptions, TrainedModel,
};

pub const DEFAULT_FOLDS: usize = 3;
pub const DEFAULT_BENCH_REPEATS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    /// Per-histogram L1 ratios only.
    #[default]
    L1,
    /// L1 ratios followed by a per-feature z-score fitted on the training split.
    Zscore,
}

impl FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l1" => Ok(Normalization::L1),
            "zscore" => Ok(Normalization::Zscore),
            _ => Err(Error::Usage(format!("unknown normalization {s:?} (expected l1 or zscore)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureFormat {
    Csv,
    #[default]
    Bin,
    Both,
}

impl FeatureFormat {
    fn binary(self) -> bool {
        matches!(self, FeatureFormat::Bin | FeatureFormat::Both)
    }

    fn csv(self) -> bool {
        matches!(self, FeatureFormat::Csv | FeatureFormat::Both)
    }
}

impl FromStr for FeatureFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(FeatureFormat::Csv),
            "bin" => Ok(FeatureFormat::Bin),
            "both" => Ok(FeatureFormat::Both),
            _ => Err(Error::Usage(format!("unknown feature format {s:?} (expected csv, bin or both)"))),
        }
    }
}

/// Fully resolved settings for one invocation. Also the schema of `--config`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub manifest: Option<PathBuf>,
    /// Directory holding `<clip_id>.landmarks.txt`; defaults to the manifest's directory.
    pub landmarks_dir: Option<PathBuf>,
    pub area: AreaSpec,
    pub division: DivisionFactor,
    pub model: ModelKind,
    pub grid: Option<PathBuf>,
    pub geometry: Option<PathBuf>,
    pub seed: u64,
    pub test_fraction: f64,
    pub out: PathBuf,
    pub normalization: Normalization,
    /// Number of seeded splits for `split`, timing passes for `bench`.
    /// Unset means 1 for `split` and 3 for `bench`.
    pub repeats: Option<usize>,
    /// Extraction workers; 0 uses every logical core.
    pub jobs: usize,
    pub folds: usize,
    pub format: FeatureFormat,
    pub repression: RepressionPolicy,
    /// Also render `roc.svg` next to the ROC CSVs.
    pub svg: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            manifest: None,
            landmarks_dir: None,
            area: AreaSpec::single(RoiKind::WholeFace),
            division: DivisionFactor::Five,
            model: ModelKind::Rf,
            grid: None,
            geometry: None,
            seed: 42,
            test_fraction: 0.2,
            out: PathBuf::from("out"),
            normalization: Normalization::L1,
            repeats: None,
            jobs: 0,
            folds: DEFAULT_FOLDS,
            format: FeatureFormat::Bin,
            repression: RepressionPolicy::Others,
            svg: false,
        }
    }
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path.display(), e))
    }

    fn manifest_path(&self) -> Result<&Path> {
        self.manifest
            .as_deref()
            .ok_or_else(|| Error::Usage("no manifest given (use --manifest or the config file)".into()))
    }

    fn landmarks_path(&self) -> Result<PathBuf> {
        if let Some(dir) = &self.landmarks_dir {
            return Ok(dir.clone());
        }
        let manifest = self.manifest_path()?;
        Ok(manifest.parent().map(Path::to_path_buf).unwrap_or_default())
    }

    fn load_options(&self) -> LoadOptions {
        LoadOptions {
            repression: self.repression,
            ..LoadOptions::default()
        }
    }

    fn geometry(&self) -> Result<RoiGeometry> {
        match &self.geometry {
            Some(path) => RoiGeometry::load(path),
            None => Ok(RoiGeometry::default()),
        }
    }

    fn hyper_grid(&self) -> Result<HyperGrid> {
        match &self.grid {
            Some(path) => HyperGrid::load(path),
            None => Ok(HyperGrid::default()),
        }
    }

    fn train_options(&self) -> TrainOptions {
        TrainOptions {
            standardize: self.normalization == Normalization::Zscore,
        }
    }

    /// Manifest rows that survive relabeling, in manifest order.
    fn entries(&self) -> Result<Vec<ClipManifestEntry>> {
        let entries = load_manifest(self.manifest_path()?)?;
        let kept: Vec<_> = entries
            .into_iter()
            .filter(|e| relabel_with(e.raw_label, self.repression).is_some())
            .collect();
        if kept.is_empty() {
            return Err(Error::EmptyInput);
        }
        Ok(kept)
    }

    pub fn splits_path(&self) -> PathBuf {
        self.out.join("splits.json")
    }

    pub fn features_path(&self, ext: &str) -> PathBuf {
        self.out.join(format!("features_{}_d{}.{ext}", self.area, self.division.get()))
    }

    pub fn model_path(&self) -> PathBuf {
        self.out.join(format!("model_{}.json", self.model))
    }

    pub fn eval_dir(&self) -> PathBuf {
        self.out.join(format!("eval_{}", self.model))
    }

    pub fn bench_path(&self) -> PathBuf {
        self.out.join("bench.json")
    }
}

/// Train/test clip ids for one seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub seed: u64,
    pub train: Vec<String>,
    pub test: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitsFile {
    pub test_fraction: f64,
    pub splits: Vec<Split>,
}

impl SplitsFile {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path.display(), e))
    }

    /// The split for `seed`, or the first one when no split used that seed.
    pub fn for_seed(&self, seed: u64) -> Result<&Split> {
        self.splits
            .iter()
            .find(|s| s.seed == seed)
            .or_else(|| self.splits.first())
            .ok_or_else(|| Error::Validation("splits file lists no splits".into()))
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::json(path.display(), e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn ensure_out(cfg: &RunConfig) -> Result<()> {
    fs::create_dir_all(&cfg.out).map_err(|e| Error::io(&cfg.out, e))
}

/// Writes `splits.json` with `repeats` stratified splits seeded `seed, seed+1, ...`.
pub fn cmd_split(cfg: &RunConfig) -> Result<PathBuf> {
    let entries = cfg.entries()?;
    let labels: Vec<CoarseLabel> = entries
        .iter()
        .filter_map(|e| relabel_with(e.raw_label, cfg.repression))
        .collect();
    let repeats = cfg.repeats.unwrap_or(1);
    if repeats == 0 {
        return Err(Error::Validation("repeats must be at least 1".into()));
    }
    let mut splits = Vec::with_capacity(repeats);
    for r in 0..repeats as u64 {
        let seed = cfg.seed.wrapping_add(r);
        let (train, test) = stratified_split_indices(
            &labels,
            SplitSpec {
                test_fraction: cfg.test_fraction,
                seed,
            },
        )?;
        let ids = |idx: Vec<usize>| idx.into_iter().map(|i| entries[i].clip_id.clone()).collect();
        splits.push(Split {
            seed,
            train: ids(train),
            test: ids(test),
        });
    }
    ensure_out(cfg)?;
    let path = cfg.splits_path();
    write_json(
        &path,
        &SplitsFile {
            test_fraction: cfg.test_fraction,
            splits,
        },
    )?;
    Ok(path)
}

/// Extracts one feature row per clip and writes the table in the configured format(s).
pub fn cmd_extract(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let entries = cfg.entries()?;
    let opts = ExtractOptions {
        area: cfg.area.clone(),
        division: cfg.division,
        geometry: cfg.geometry()?,
        load: cfg.load_options(),
        jobs: cfg.jobs,
    };
    let table = extract_batch(&entries, &cfg.landmarks_path()?, &opts)?;
    ensure_out(cfg)?;
    let mut written = Vec::new();
    if cfg.format.binary() {
        let path = cfg.features_path("fmef");
        table.write_binary(&path)?;
        written.push(path);
    }
    if cfg.format.csv() {
        let path = cfg.features_path("csv");
        table.write_csv(&path)?;
        written.push(path);
    }
    Ok(written)
}

fn read_features(cfg: &RunConfig) -> Result<FeatureTable> {
    let table = if cfg.format.binary() {
        FeatureTable::read_binary(cfg.features_path("fmef"))?
    } else {
        FeatureTable::read_csv(cfg.features_path("csv"), cfg.area.clone(), cfg.division)?
    };
    if table.area != cfg.area || table.division != cfg.division {
        return Err(Error::Validation(format!(
            "feature file holds {} d={}, expected {} d={}",
            table.area,
            table.division.get(),
            cfg.area,
            cfg.division.get()
        )));
    }
    Ok(table)
}

fn split_datasets(cfg: &RunConfig) -> Result<(LabeledDataset, LabeledDataset)> {
    let splits = SplitsFile::load(cfg.splits_path())?;
    let split = splits.for_seed(cfg.seed)?;
    let all = LabeledDataset::from_table(&read_features(cfg)?)?;
    Ok((all.select_ids(&split.train)?, all.select_ids(&split.test)?))
}

/// Grid search on the training split, refit at the best point, write `model_<kind>.json`
/// and the per-point scores to `grid_<kind>.json`.
pub fn cmd_train(cfg: &RunConfig) -> Result<PathBuf> {
    let grid = cfg.hyper_grid()?;
    let (train, _) = split_datasets(cfg)?;
    let opts = cfg.train_options();
    let search = grid_search_with(cfg.model, &train, &grid, cfg.folds, cfg.seed, opts)?;
    let model = train_with(search.best, &train, cfg.seed, opts)?;
    ensure_out(cfg)?;
    write_json(&cfg.out.join(format!("grid_{}.json", cfg.model)), &search)?;
    let path = cfg.model_path();
    model.save(&path)?;
    Ok(path)
}

/// Scores the test split and writes `summary.json`, `confusion.csv` and the ROC CSVs.
/// A `bench.json` for the same area and division, if present, fills `cc_seconds`.
pub fn cmd_eval(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let model = TrainedModel::load(cfg.model_path())?;
    let (_, test) = split_datasets(cfg)?;
    let meta = ReportMeta {
        model: model.kind.to_string(),
        area: cfg.area.to_string(),
        division: cfg.division.get(),
        seed: cfg.seed,
    };
    let mut report = eval::evaluate(&model, &test, meta)?;
    let bench = cfg.bench_path();
    if bench.exists() {
        let text = fs::read_to_string(&bench).map_err(|e| Error::io(&bench, e))?;
        let record: BenchRecord = serde_json::from_str(&text).map_err(|e| Error::json(bench.display(), e))?;
        if record.area == cfg.area && record.division == cfg.division {
            report.cc_seconds = Some(record.mean_seconds_per_sample);
        }
    }
    eval::emit_plots(&report, cfg.eval_dir(), cfg.svg)
}

/// Single-threaded extraction timing over the whole manifest; writes `bench.json`.
pub fn cmd_bench(cfg: &RunConfig) -> Result<PathBuf> {
    let entries = cfg.entries()?;
    let record = eval::bench_cc(
        &entries,
        &cfg.landmarks_path()?,
        &cfg.area,
        cfg.division,
        cfg.repeats.unwrap_or(DEFAULT_BENCH_REPEATS),
        &cfg.geometry()?,
        &cfg.load_options(),
    )?;
    ensure_out(cfg)?;
    let path = cfg.bench_path();
    write_json(&path, &record)?;
    Ok(path)
}

/// split, extract, train, eval. Benchmarking is left out so reruns are byte-identical.
pub fn cmd_pipeline(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let mut written = vec![cmd_split(cfg)?];
    written.extend(cmd_extract(cfg)?);
    written.push(cmd_train(cfg)?);
    written.extend(cmd_eval(cfg)?);
    Ok(written)
}

#[derive(Debug, Parser)]
#[command(name = "fmer", version, about = "Micro-expression recognition with LBP-TOP features")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write stratified train/test splits.
    Split(Flags),
    /// Extract LBP-TOP features for every clip.
    Extract(Flags),
    /// Grid-search and fit a classifier on the training split.
    Train(Flags),
    /// Evaluate a trained model on the test split.
    Eval(Flags),
    /// Time feature extraction per sample.
    Bench(Flags),
    /// Run split, extract, train and eval in order.
    Pipeline(Flags),
}

impl Command {
    fn flags(&self) -> &Flags {
        match self {
            Command::Split(f)
            | Command::Extract(f)
            | Command::Train(f)
            | Command::Eval(f)
            | Command::Bench(f)
            | Command::Pipeline(f) => f,
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// JSON file with any RunConfig fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub landmarks_dir: Option<PathBuf>,
    /// whole|eyebrow|eye|middle|lip|bottom, or a `+`-joined combination.
    #[arg(long)]
    pub area: Option<String>,
    /// Block grid side: 5 or 10.
    #[arg(long)]
    pub division: Option<String>,
    /// lsvm|lr|rf|knn
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub test_fraction: Option<f64>,
    /// JSON hyperparameter grid.
    #[arg(long)]
    pub grid: Option<PathBuf>,
    /// JSON ROI geometry.
    #[arg(long)]
    pub geometry: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Extraction workers; 0 uses every logical core.
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long)]
    pub repeats: Option<usize>,
    /// Cross-validation folds for the grid search.
    #[arg(long)]
    pub folds: Option<usize>,
    /// csv|bin|both
    #[arg(long)]
    pub format: Option<String>,
    /// l1|zscore
    #[arg(long)]
    pub normalization: Option<String>,
    /// Also write roc.svg.
    #[arg(long)]
    pub svg: bool,
}

impl Flags {
    /// Layers these flags over the config file (if any) over the defaults.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(v) = &self.manifest {
            cfg.manifest = Some(v.clone());
        }
        if let Some(v) = &self.landmarks_dir {
            cfg.landmarks_dir = Some(v.clone());
        }
        if let Some(v) = &self.area {
            cfg.area = v.parse()?;
        }
        if let Some(v) = &self.division {
            cfg.division = v.parse()?;
        }
        if let Some(v) = &self.model {
            cfg.model = v.parse()?;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.test_fraction {
            cfg.test_fraction = v;
        }
        if let Some(v) = &self.grid {
            cfg.grid = Some(v.clone());
        }
        if let Some(v) = &self.geometry {
            cfg.geometry = Some(v.clone());
        }
        if let Some(v) = &self.out {
            cfg.out = v.clone();
        }
        if let Some(v) = self.jobs {
            cfg.jobs = v;
        }
        if let Some(v) = self.repeats {
            cfg.repeats = Some(v);
        }
        if let Some(v) = self.folds {
            cfg.folds = v;
        }
        if let Some(v) = &self.format {
            cfg.format = v.parse()?;
        }
        if let Some(v) = &self.normalization {
            cfg.normalization = v.parse()?;
        }
        if self.svg {
            cfg.svg = true;
        }
        Ok(cfg)
    }
}

/// Parses `args` (including the program name) and runs the chosen stage.
/// Returns the files written.
pub fn run<I, T>(args: I) -> Result<Vec<PathBuf>>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| {
        let text = e.to_string();
        let first = text.lines().next().unwrap_or_default();
        Error::Usage(first.trim_start_matches("error: ").to_string())
    })?;
    let cfg = cli.command.flags().resolve()?;
    match cli.command {
        Command::Split(_) => cmd_split(&cfg).map(|p| vec![p]),
        Command::Extract(_) => cmd_extract(&cfg),
        Command::Train(_) => cmd_train(&cfg).map(|p| vec![p]),
        Command::Eval(_) => cmd_eval(&cfg),
        Command::Bench(_) => cmd_bench(&cfg).map(|p| vec![p]),
        Command::Pipeline(_) => cmd_pipeline(&cfg),
    }
}

/// Entry point for the binary. Prints written paths on success; on failure
/// prints one `error[<category>]: <message>` line to stderr.
pub fn main() -> ExitCode {
    let args: Vec<OsString> = std::env::args_os().collect();
    // Let clap render help and version text itself.
    if let Err(e) = Cli::try_parse_from(&args) {
        if matches!(
            e.kind(),
            clap::error::ErrorKind::DisplayHelp
                | clap::error::ErrorKind::DisplayVersion
                | clap::error::ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand
        ) {
            e.exit();
        }
    }
    match run(args) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            let message = e.to_string().replace('\n', " ");
            eprintln!("error[{}]: {}", e.category(), message.trim());
            ExitCode::from(if matches!(e, Error::Usage(_)) { 2 } else { 1 })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flags(args: &[&str]) -> Flags {
        let mut full = vec!["fmer", "split"];
        full.extend_from_slice(args);
        match Cli::try_parse_from(full).unwrap().command {
            Command::Split(f) => f,
            _ => unreachable!(),
        }
    }

    #[test]
    fn defaults_without_flags() {
        let cfg = flags(&[]).resolve().unwrap();
        assert_eq!(cfg, RunConfig::default());
    }

    #[test]
    fn flags_override_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        fs::write(&path, r#"{"seed": 7, "area": "eyebrow+lip", "division": 10, "model": "knn"}"#).unwrap();
        let cfg = flags(&["--config", path.to_str().unwrap(), "--seed", "9"]).resolve().unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.area.to_string(), "eyebrow+lip");
        assert_eq!(cfg.division, DivisionFactor::Ten);
        assert_eq!(cfg.model, ModelKind::Knn);
        assert_eq!(cfg.test_fraction, 0.2);
    }

    #[test]
    fn unknown_config_key_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        fs::write(&path, r#"{"sede": 7}"#).unwrap();
        let err = flags(&["--config", path.to_str().unwrap()]).resolve().unwrap_err();
        assert_eq!(err.category(), "json");
    }

    #[test]
    fn bad_values_are_usage_errors() {
        for args in [
            &["--model", "svm"][..],
            &["--division", "7"],
            &["--area", "nose"],
            &["--format", "xml"],
            &["--normalization", "l2"],
        ] {
            assert_eq!(flags(args).resolve().unwrap_err().category(), "usage", "{args:?}");
        }
    }

    #[test]
    fn missing_manifest_is_usage_error() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().to_str().unwrap();
        let err = run(["fmer", "split", "--out", out]).unwrap_err();
        assert_eq!(err.category(), "usage");
    }

    #[test]
    fn artifact_names() {
        let cfg = flags(&["--area", "eyebrow+lip", "--division", "10", "--model", "lr", "--out", "o"])
            .resolve()
            .unwrap();
        assert_eq!(cfg.features_path("fmef"), Path::new("o/features_eyebrow+lip_d10.fmef"));
        assert_eq!(cfg.model_path(), Path::new("o/model_lr.json"));
        assert_eq!(cfg.eval_dir(), Path::new("o/eval_lr"));
    }
}
