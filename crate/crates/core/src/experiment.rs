//! Batch experiments driven by one JSON config: data loading, fitting, evaluation,
//! importance, partial effects, forecasting and parameter sweeps.
//!
//! Every command writes into the configured output directory. When a stage fails,
//! the files written by that invocation are removed and the error names the stage.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::{
    compare, default_grid, importance, make_forecast_dataset, partial_effect_1d, partial_effect_2d,
    render_importance_table, subsample_study, DateRange, EvalTable, ForecastSpec, TableLayout,
    DEFAULT_GRID_POINTS, STANDARD_HORIZONS,
};
use crate::dataio::{
    align_and_interpolate, build_features, load_series, summarize, write_series, DailyPanel,
    Dataset, RawSeries, TransformSpec, DEFAULT_WINDOW,
};
use crate::error::{Error, Result};
use crate::forest::{fit_forest, ForestConfig, ForestModel};
use crate::linear::{fit_ar1, fit_ols};
use crate::report::{to_sorted_json, write_csv, write_sorted_json, write_text};
use crate::synthgen::{generate, generate_price_path, DgpConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    /// One `date,value` CSV per variable plus a transform spec.
    Series {
        files: BTreeMap<String, PathBuf>,
        transform_spec: PathBuf,
        /// Series whose dates define the panel calendar.
        calendar: String,
    },
    /// Generated data; `price_path` also produces a price level for forecasting.
    Synth {
        dgp: DgpConfig,
        #[serde(default)]
        price_path: bool,
    },
    /// A dataset CSV as written by `ingest` or `synth`.
    Dataset { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdpRequest {
    /// One feature for a curve, two for a surface.
    pub features: Vec<String>,
    #[serde(default)]
    pub points: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    #[serde(default)]
    pub min_split_sizes: Vec<usize>,
    #[serde(default)]
    pub n_trees: Vec<usize>,
}

fn default_horizons() -> Vec<usize> {
    STANDARD_HORIZONS.to_vec()
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub data: DataSource,
    #[serde(default)]
    pub forest: ForestConfig,
    /// Target variable; for series data this overrides the transform spec's target.
    #[serde(default)]
    pub target: Option<String>,
    #[serde(default)]
    pub date_ranges: Vec<DateRange>,
    #[serde(default = "default_horizons")]
    pub horizons: Vec<usize>,
    #[serde(default)]
    pub pdp: Vec<PdpRequest>,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub mse_checkpoints: Vec<usize>,
    #[serde(default = "default_out")]
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    /// Reads a config, or the `config` entry of a run manifest. Relative paths are
    /// resolved against the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let value: serde_json::Value = serde_json::from_str(&text)?;
        let value = match value.get("manifest_version") {
            Some(_) => value
                .get("config")
                .cloned()
                .ok_or_else(|| Error::Config("manifest has no `config` entry".into()))?,
            None => value,
        };
        let mut cfg: Self = serde_json::from_value(value)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        match &mut self.data {
            DataSource::Series {
                files,
                transform_spec,
                ..
            } => {
                files.values_mut().for_each(fix);
                fix(transform_spec);
            }
            DataSource::Dataset { path } => fix(path),
            DataSource::Synth { .. } => {}
        }
        fix(&mut self.output_dir);
    }

    /// Checks everything that can be checked without touching data.
    pub fn validate(&self) -> Result<()> {
        let f = &self.forest;
        if f.n_trees == 0 {
            return Err(Error::Config("forest.n_trees must be at least 1".into()));
        }
        if f.min_split_size < 2 {
            return Err(Error::Config(
                "forest.min_split_size must be at least 2".into(),
            ));
        }
        if !(f.subsample_fraction > 0.0 && f.subsample_fraction <= 1.0) {
            return Err(Error::Config(
                "forest.subsample_fraction must lie in (0, 1]".into(),
            ));
        }
        if f.mtry == Some(0) {
            return Err(Error::Config("forest.mtry must be at least 1".into()));
        }
        if let Some(&h) = self.horizons.iter().find(|&&h| h == 0) {
            return Err(Error::Config(format!("invalid forecast horizon {h}")));
        }
        for req in &self.pdp {
            if !(1..=2).contains(&req.features.len()) {
                return Err(Error::Config(
                    "a pdp request names one or two features".into(),
                ));
            }
            if req.features.len() == 2 && req.features[0] == req.features[1] {
                return Err(Error::Config(
                    "a 2D pdp request needs two distinct features".into(),
                ));
            }
            if req.points == Some(0) {
                return Err(Error::Config("pdp points must be at least 1".into()));
            }
        }
        if self.sweep.min_split_sizes.iter().any(|&p| p < 2) || self.sweep.n_trees.contains(&0) {
            return Err(Error::Config(
                "sweep values must be positive (min_split_size >= 2)".into(),
            ));
        }
        if self.mse_checkpoints.windows(2).any(|w| w[1] <= w[0])
            || self
                .mse_checkpoints
                .iter()
                .any(|&c| c == 0 || c > f.n_trees)
        {
            return Err(Error::Config(
                "mse_checkpoints must be increasing and within 1..=n_trees".into(),
            ));
        }
        for r in &self.date_ranges {
            if r.from > r.to {
                return Err(Error::Config(format!(
                    "date range `{}` ends before it starts",
                    r.name
                )));
            }
        }
        if let DataSource::Synth { dgp, .. } = &self.data {
            dgp.validate()?;
        }
        Ok(())
    }
}

/// Command-line overrides applied on top of a config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(seed) = self.seed {
            cfg.forest.seed = seed;
        }
        if let Some(out) = &self.output_dir {
            cfg.output_dir = out.clone();
        }
    }
}

/// A failure tagged with the stage that raised it.
#[derive(Debug)]
pub struct StageError {
    pub stage: &'static str,
    pub source: Error,
}

impl fmt::Display for StageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "stage `{}` failed: {}", self.stage, self.source)
    }
}

impl std::error::Error for StageError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.source)
    }
}

impl StageError {
    pub fn exit_code(&self) -> i32 {
        self.source.exit_code()
    }
}

trait Stage<T> {
    fn stage(self, stage: &'static str) -> Result<T, StageError>;
}

impl<T> Stage<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T, StageError> {
        self.map_err(|source| StageError { stage, source })
    }
}

/// Data ready for modeling, plus the price panel when forecasting is possible.
#[derive(Debug, Clone)]
pub struct LoadedData {
    pub dataset: Dataset,
    pub panel: Option<DailyPanel>,
    pub price_column: Option<String>,
}

pub fn load_data(cfg: &ExperimentConfig) -> Result<LoadedData> {
    match &cfg.data {
        DataSource::Series {
            files,
            transform_spec,
            calendar,
        } => {
            let mut spec = TransformSpec::load(transform_spec)?;
            if let Some(target) = &cfg.target {
                spec = spec.with_target(target)?;
            }
            let target = spec
                .target()
                .ok_or_else(|| Error::Config("transform spec has no target".into()))?
                .to_string();
            let mut series = Vec::with_capacity(files.len());
            for (name, path) in files {
                if !spec.variables.contains_key(name) && name != calendar {
                    continue;
                }
                series.push(load_series(path, name)?);
            }
            let panel = align_and_interpolate(&series, calendar)?;
            let dataset = build_features(&panel, &spec, &target)?;
            Ok(LoadedData {
                dataset,
                panel: Some(panel),
                price_column: Some(target),
            })
        }
        DataSource::Synth { dgp, price_path } => {
            if *price_path {
                let path = generate_price_path(dgp, DEFAULT_WINDOW)?;
                Ok(LoadedData {
                    dataset: path.dataset,
                    panel: Some(path.panel),
                    price_column: Some(dgp.target_name().to_string()),
                })
            } else {
                Ok(LoadedData {
                    dataset: generate(dgp)?.dataset,
                    panel: None,
                    price_column: None,
                })
            }
        }
        DataSource::Dataset { path } => Ok(LoadedData {
            dataset: Dataset::read_csv(path)?,
            panel: None,
            price_column: None,
        }),
    }
}

/// Tracks files written by one invocation so they can be removed on failure.
struct Outputs {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.written.push(p.clone());
        p
    }

    fn text(&mut self, name: &str, text: &str) -> Result<()> {
        let p = self.path(name);
        write_text(p, text)
    }

    fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        let p = self.path(name);
        write_sorted_json(p, value)
    }

    fn discard(&mut self) {
        for p in self.written.drain(..) {
            let _ = std::fs::remove_file(p);
        }
    }
}

/// Which command to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Ingest,
    Synth,
    Fit,
    Eval,
    Importance,
    Pdp,
    Forecast,
    Sweep,
    Run,
}

/// Runs `command` and returns the written files, relative to the output directory.
pub fn execute(command: Command, cfg: &ExperimentConfig) -> Result<Vec<PathBuf>, StageError> {
    cfg.validate().stage("config")?;
    let mut out = Outputs::new(&cfg.output_dir).stage("output")?;
    match dispatch(command, cfg, &mut out) {
        Ok(()) => {
            let mut files: Vec<PathBuf> = out
                .written
                .iter()
                .filter_map(|p| p.strip_prefix(&out.dir).ok().map(Path::to_path_buf))
                .collect();
            files.sort();
            files.dedup();
            Ok(files)
        }
        Err(e) => {
            out.discard();
            Err(e)
        }
    }
}

/// [`execute`] on a dedicated pool of `threads` workers.
pub fn execute_with_threads(
    command: Command,
    cfg: &ExperimentConfig,
    threads: usize,
) -> Result<Vec<PathBuf>, StageError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))
        .stage("config")?;
    pool.install(|| execute(command, cfg))
}

fn dispatch(command: Command, cfg: &ExperimentConfig, out: &mut Outputs) -> Result<(), StageError> {
    let data = load_data(cfg).stage("load")?;
    let d = &data.dataset;
    match command {
        Command::Ingest => ingest(d, out),
        Command::Synth => synth(cfg, &data, out),
        Command::Fit => {
            let model = fit_forest(d, &cfg.forest).stage("fit")?;
            write_model(&model, d, out)
        }
        Command::Eval => {
            let model = fit_forest(d, &cfg.forest).stage("fit")?;
            eval(cfg, &model, d, out)
        }
        Command::Importance => {
            let model = fit_forest(d, &cfg.forest).stage("fit")?;
            importances(cfg, &model, d, out)
        }
        Command::Pdp => {
            let model = fit_forest(d, &cfg.forest).stage("fit")?;
            pdps(cfg, &model, d, out)
        }
        Command::Forecast => forecast(cfg, &data, out),
        Command::Sweep => sweep(cfg, d, out),
        Command::Run => {
            let model = fit_forest(d, &cfg.forest).stage("fit")?;
            write_model(&model, d, out)?;
            eval(cfg, &model, d, out)?;
            importances(cfg, &model, d, out)?;
            pdps(cfg, &model, d, out)?;
            if data.panel.is_some() && !cfg.horizons.is_empty() {
                forecast(cfg, &data, out)?;
            }
            if !cfg.sweep.min_split_sizes.is_empty() {
                sweep(cfg, d, out)?;
            }
            manifest(cfg, out)
        }
    }
}

fn ingest(d: &Dataset, out: &mut Outputs) -> Result<(), StageError> {
    let p = out.path("dataset.csv");
    d.write_csv(p).stage("ingest")?;
    let stats = summarize(d).stage("summarize")?;
    out.text("summary.txt", &stats.render())
        .stage("summarize")?;
    out.json("summary.json", &stats).stage("summarize")
}

fn synth(cfg: &ExperimentConfig, data: &LoadedData, out: &mut Outputs) -> Result<(), StageError> {
    let DataSource::Synth { dgp, .. } = &cfg.data else {
        return Err(StageError {
            stage: "synth",
            source: Error::Config("`synth` needs a synth data source".into()),
        });
    };
    let p = out.path("dataset.csv");
    data.dataset.write_csv(p).stage("synth")?;
    out.json("dgp.json", dgp).stage("synth")?;
    if let (Some(panel), Some(col)) = (&data.panel, &data.price_column) {
        let values = panel.column(col).unwrap_or_default();
        let series = RawSeries::new(
            col.clone(),
            panel
                .calendar()
                .iter()
                .copied()
                .zip(values.iter().copied())
                .collect(),
        )
        .stage("synth")?;
        let p = out.path(&format!("{col}.csv"));
        write_series(p, &series).stage("synth")?;
    }
    Ok(())
}

fn write_model(model: &ForestModel, d: &Dataset, out: &mut Outputs) -> Result<(), StageError> {
    out.text("model.json", &model.to_json().stage("serialize")?)
        .stage("serialize")?;
    let metrics = model.evaluate(d).stage("evaluate")?;
    out.json("metrics.json", &metrics).stage("evaluate")?;
    let dump = model.trees[0].dump(Some(&model.feature_names));
    out.text("tree_0.txt", &dump).stage("serialize")
}

fn eval(
    cfg: &ExperimentConfig,
    model: &ForestModel,
    d: &Dataset,
    out: &mut Outputs,
) -> Result<(), StageError> {
    let ols = fit_ols(d).stage("ols")?;
    let ar1 = fit_ar1(d).stage("ar1")?;
    let mut table = EvalTable::new(TableLayout::Fit);
    table.push(compare(model, &ols, &ar1, d, "benchmark").stage("compare")?);
    out.text("eval_table.txt", &table.render())
        .stage("compare")?;
    out.text("eval_table.json", &table.to_json().stage("compare")?)
        .stage("compare")?;
    out.json("ols.json", &ols.coefficient_report())
        .stage("ols")?;
    out.json("ar1.json", &ar1.coefficient_report())
        .stage("ar1")?;

    let checkpoints = if cfg.mse_checkpoints.is_empty() {
        checkpoint_ladder(model.n_trees())
    } else {
        cfg.mse_checkpoints.clone()
    };
    let curve = model.oob_mse_curve(d, &checkpoints).stage("mse_curve")?;
    let p = out.path("mse_curve.csv");
    write_csv(
        p,
        &["n_trees", "oob_mse"],
        curve
            .iter()
            .map(|(k, v)| vec![k.to_string(), v.map_or_else(String::new, |v| v.to_string())]),
    )
    .stage("mse_curve")
}

/// 1, 2, 5, 10, 20, 50, ... up to and including `n`.
fn checkpoint_ladder(n: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut base = 1;
    'outer: loop {
        for m in [1, 2, 5] {
            let k = base * m;
            if k >= n {
                break 'outer;
            }
            out.push(k);
        }
        base *= 10;
    }
    out.push(n);
    out
}

fn importances(
    cfg: &ExperimentConfig,
    model: &ForestModel,
    d: &Dataset,
    out: &mut Outputs,
) -> Result<(), StageError> {
    let full = importance(model);
    let p = out.path("importance.csv");
    full.write_csv(p).stage("importance")?;
    let mut columns = vec![("full sample".to_string(), Some(full))];
    if !cfg.date_ranges.is_empty() {
        let study = subsample_study(d, &cfg.date_ranges, &cfg.forest).stage("subsample")?;
        for (name, report) in &study {
            if let Some(r) = report {
                let p = out.path(&format!("importance_{}.csv", file_stem(name)));
                r.write_csv(p).stage("subsample")?;
            }
        }
        columns.extend(study);
    }
    out.text("importance_table.txt", &render_importance_table(&columns))
        .stage("importance")
}

fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn pdps(
    cfg: &ExperimentConfig,
    model: &ForestModel,
    d: &Dataset,
    out: &mut Outputs,
) -> Result<(), StageError> {
    for req in &cfg.pdp {
        let points = req.points.unwrap_or(DEFAULT_GRID_POINTS);
        let grids = req
            .features
            .iter()
            .map(|f| default_grid(d, f, points))
            .collect::<Result<Vec<_>>>()
            .stage("pdp")?;
        let (grid, name) = if let [f] = req.features.as_slice() {
            (
                partial_effect_1d(model, d, f, &grids[0]),
                format!("pdp_{}.csv", file_stem(f)),
            )
        } else {
            let (f1, f2) = (&req.features[0], &req.features[1]);
            (
                partial_effect_2d(model, d, f1, f2, &grids[0], &grids[1]),
                format!("pdp_{}_{}.csv", file_stem(f1), file_stem(f2)),
            )
        };
        let grid = grid.stage("pdp")?;
        let p = out.path(&name);
        grid.write_csv(p).stage("pdp")?;
    }
    Ok(())
}

fn forecast(
    cfg: &ExperimentConfig,
    data: &LoadedData,
    out: &mut Outputs,
) -> Result<(), StageError> {
    let (Some(panel), Some(price)) = (&data.panel, &data.price_column) else {
        return Err(StageError {
            stage: "forecast",
            source: Error::Config(
                "forecasting needs a price level: use series data or a synth source with price_path".into(),
            ),
        });
    };
    let mut table = EvalTable::new(TableLayout::Forecast);
    for &h in &cfg.horizons {
        let spec = ForecastSpec::new(h).stage("forecast")?;
        let fd = make_forecast_dataset(&data.dataset, spec, panel, price).stage("forecast")?;
        let model = fit_forest(&fd, &cfg.forest).stage("forecast")?;
        let ols = fit_ols(&fd).stage("ols")?;
        let ar1 = fit_ar1(&fd).stage("ar1")?;
        table.push(compare(&model, &ols, &ar1, &fd, spec.label()).stage("compare")?);
    }
    out.text("forecast_table.txt", &table.render())
        .stage("forecast")?;
    out.text("forecast_table.json", &table.to_json().stage("forecast")?)
        .stage("forecast")
}

fn sweep(cfg: &ExperimentConfig, d: &Dataset, out: &mut Outputs) -> Result<(), StageError> {
    let sizes = if cfg.sweep.min_split_sizes.is_empty() {
        vec![cfg.forest.min_split_size]
    } else {
        cfg.sweep.min_split_sizes.clone()
    };
    let counts = if cfg.sweep.n_trees.is_empty() {
        vec![cfg.forest.n_trees]
    } else {
        cfg.sweep.n_trees.clone()
    };
    let ols = fit_ols(d).stage("ols")?;
    let ar1 = fit_ar1(d).stage("ar1")?;
    let mut table = EvalTable::new(TableLayout::Fit);
    for &n_trees in &counts {
        for &p in &sizes {
            let fc = ForestConfig {
                n_trees,
                min_split_size: p,
                ..cfg.forest.clone()
            };
            let model = fit_forest(d, &fc).stage("sweep")?;
            table
                .push(compare(&model, &ols, &ar1, d, format!("p={p} N={n_trees}")).stage("sweep")?);
        }
    }
    out.text("sweep_table.txt", &table.render())
        .stage("sweep")?;
    out.text("sweep_table.json", &table.to_json().stage("sweep")?)
        .stage("sweep")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub manifest_version: u32,
    pub config: ExperimentConfig,
    pub seed: u64,
    /// SHA-256 of every other output file, keyed by file name.
    pub files: BTreeMap<String, String>,
}

fn manifest(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<(), StageError> {
    let mut files = BTreeMap::new();
    for p in &out.written {
        let bytes = std::fs::read(p)
            .map_err(|e| Error::io(p, e))
            .stage("manifest")?;
        let name = p
            .strip_prefix(&out.dir)
            .unwrap_or(p)
            .to_string_lossy()
            .into_owned();
        files.insert(name, hex::encode(Sha256::digest(&bytes)));
    }
    let m = Manifest {
        manifest_version: 1,
        config: cfg.clone(),
        seed: cfg.forest.seed,
        files,
    };
    let text = to_sorted_json(&m).stage("manifest")?;
    out.text("manifest.json", &text).stage("manifest")
}
