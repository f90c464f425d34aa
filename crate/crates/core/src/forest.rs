//! Random forest: per-tree subsamples, seeded per-tree rng streams,
//! out-of-bag evaluation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cart::{grow_tree, RegressionTree, TreeConfig};
use crate::dataio::Dataset;
use crate::error::{Error, Result};
use crate::report::to_sorted_json;

/// How each tree's training rows are drawn.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    /// Distinct rows; the rest form the tree's out-of-bag set.
    #[default]
    WithoutReplacement,
    /// Rows drawn with replacement; rows never drawn are out of bag.
    Bootstrap,
}

/// Which rows count as out of bag.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OobMode {
    /// Each tree draws its own subsample.
    #[default]
    PerTree,
    /// One holdout drawn once and shared by all trees.
    FixedHoldout,
    /// Every tree trains on the earliest rows by date; the latest rows are held out.
    Chronological,
}

fn default_n_trees() -> usize {
    1000
}
fn default_min_split() -> usize {
    10
}
fn default_fraction() -> f64 {
    2.0 / 3.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    #[serde(default = "default_n_trees")]
    pub n_trees: usize,
    #[serde(default = "default_min_split")]
    pub min_split_size: usize,
    /// Features tried per split; `None` means `ceil(d / 3)`.
    #[serde(default)]
    pub mtry: Option<usize>,
    #[serde(default = "default_fraction")]
    pub subsample_fraction: f64,
    #[serde(default)]
    pub sampling: Sampling,
    #[serde(default)]
    pub oob_mode: OobMode,
    #[serde(default)]
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: default_n_trees(),
            min_split_size: default_min_split(),
            mtry: None,
            subsample_fraction: default_fraction(),
            sampling: Sampling::default(),
            oob_mode: OobMode::default(),
            seed: 0,
        }
    }
}

impl ForestConfig {
    pub fn resolved_mtry(&self, n_features: usize) -> usize {
        self.mtry.unwrap_or_else(|| n_features.div_ceil(3)).max(1)
    }

    /// Rows per tree: `floor(subsample_fraction * n)`.
    pub fn subsample_size(&self, n_rows: usize) -> usize {
        (self.subsample_fraction * n_rows as f64).floor() as usize
    }

    pub fn validate(&self, n_rows: usize, n_features: usize) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::Config("n_trees must be at least 1".into()));
        }
        if !(self.subsample_fraction > 0.0 && self.subsample_fraction <= 1.0) {
            return Err(Error::Config(format!(
                "subsample_fraction must lie in (0, 1], got {}",
                self.subsample_fraction
            )));
        }
        if self.min_split_size < 2 {
            return Err(Error::Config("min_split_size must be at least 2".into()));
        }
        if n_rows < self.min_split_size {
            return Err(Error::Config(format!(
                "{n_rows} rows is fewer than min_split_size {}",
                self.min_split_size
            )));
        }
        if self.subsample_size(n_rows) == 0 {
            return Err(Error::Config("subsample is empty".into()));
        }
        if n_features == 0 {
            return Err(Error::Config("dataset has no features".into()));
        }
        let mtry = self.resolved_mtry(n_features);
        if mtry > n_features {
            return Err(Error::Config(format!(
                "mtry {mtry} exceeds {n_features} features"
            )));
        }
        Ok(())
    }
}

/// Identifies the dataset a forest was trained on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fingerprint {
    pub n_rows: usize,
    pub seed: u64,
    /// SHA-256 over the feature matrix and target, hex.
    pub data_digest: String,
}

pub fn data_digest(d: &Dataset) -> String {
    let mut h = Sha256::new();
    for name in d.feature_names() {
        h.update(name.as_bytes());
        h.update([0u8]);
    }
    for v in d.x().iter().chain(d.y()) {
        h.update(v.to_le_bytes());
    }
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub config: ForestConfig,
    pub feature_names: Vec<String>,
    pub trees: Vec<RegressionTree>,
    /// Training rows of each tree, ascending (with repeats under bootstrap).
    pub inbag: Vec<Vec<usize>>,
    pub fingerprint: Fingerprint,
}

/// Rng stream for tree `index`; depends only on `(seed, index)`.
pub fn tree_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

const HOLDOUT_STREAM: u64 = u64::MAX;

fn draw_rows<R: Rng>(rng: &mut R, n: usize, k: usize, sampling: Sampling) -> Vec<usize> {
    let mut rows = match sampling {
        Sampling::WithoutReplacement => rand::seq::index::sample(rng, n, k).into_vec(),
        Sampling::Bootstrap => (0..k).map(|_| rng.random_range(0..n)).collect(),
    };
    rows.sort_unstable();
    rows
}

/// Fits `cfg.n_trees` trees on the current rayon pool.
///
/// Tree `i` uses only the rng stream `(seed, i)`, so the fitted model does not
/// depend on the number of worker threads.
pub fn fit_forest(d: &Dataset, cfg: &ForestConfig) -> Result<ForestModel> {
    if d.is_empty() {
        return Err(Error::Config(
            "cannot fit a forest on an empty dataset".into(),
        ));
    }
    cfg.validate(d.n_rows(), d.n_features())?;
    let n = d.n_rows();
    let k = cfg.subsample_size(n);
    let tree_cfg = TreeConfig {
        min_split_size: cfg.min_split_size,
        mtry: cfg.resolved_mtry(d.n_features()),
        rng_seed: cfg.seed,
    };
    let shared = match cfg.oob_mode {
        OobMode::PerTree => None,
        OobMode::FixedHoldout => {
            let mut rng = tree_rng(cfg.seed, HOLDOUT_STREAM);
            Some(draw_rows(&mut rng, n, k, cfg.sampling))
        }
        OobMode::Chronological => {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by_key(|&i| d.dates()[i]);
            let mut rows = order[..k].to_vec();
            rows.sort_unstable();
            Some(rows)
        }
    };

    let fitted: Vec<(RegressionTree, Vec<usize>)> = (0..cfg.n_trees)
        .into_par_iter()
        .map(|i| {
            let mut rng = tree_rng(cfg.seed, i as u64);
            let rows = match &shared {
                Some(rows) => rows.clone(),
                None => draw_rows(&mut rng, n, k, cfg.sampling),
            };
            let tree = grow_tree(d, &rows, &tree_cfg, &mut rng)?;
            Ok((tree, rows))
        })
        .collect::<Result<_>>()?;
    let (trees, inbag) = fitted.into_iter().unzip();

    Ok(ForestModel {
        config: cfg.clone(),
        feature_names: d.feature_names().to_vec(),
        trees,
        inbag,
        fingerprint: Fingerprint {
            n_rows: n,
            seed: cfg.seed,
            data_digest: data_digest(d),
        },
    })
}

/// [`fit_forest`] on a dedicated pool of `threads` workers.
pub fn fit_forest_threads(d: &Dataset, cfg: &ForestConfig, threads: usize) -> Result<ForestModel> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))?;
    pool.install(|| fit_forest(d, cfg))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OobPredictions {
    /// Mean over the trees that did not train on the row; `None` if there are none.
    pub predictions: Vec<Option<f64>>,
    pub trees_per_row: Vec<usize>,
    /// Fraction of rows with at least one out-of-bag tree.
    pub coverage: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub rmse_in_sample: f64,
    /// `None` when no row has an out-of-bag tree.
    pub rmse_oob: Option<f64>,
    pub oob_coverage: f64,
}

impl ForestModel {
    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn predict_row(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_features() {
            return Err(Error::Contract(format!(
                "forest expects {} features, got {}",
                self.n_features(),
                x.len()
            )));
        }
        Ok(self.mean_prediction(x))
    }

    fn mean_prediction(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict_row(x)).sum::<f64>() / self.trees.len() as f64
    }

    /// Ensemble mean for each row.
    pub fn predict(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        rows.iter().map(|r| self.predict_row(r)).collect()
    }

    /// Predictions for every row of `d`; columns are matched by name.
    pub fn predict_dataset(&self, d: &Dataset) -> Result<Vec<f64>> {
        self.check_columns(d)?;
        Ok((0..d.n_rows())
            .into_par_iter()
            .map(|i| self.mean_prediction(d.row(i)))
            .collect())
    }

    fn check_columns(&self, d: &Dataset) -> Result<()> {
        if d.feature_names() != self.feature_names.as_slice() {
            return Err(Error::Contract(format!(
                "dataset columns {:?} do not match model columns {:?}",
                d.feature_names(),
                self.feature_names
            )));
        }
        Ok(())
    }

    fn check_fingerprint(&self, d: &Dataset) -> Result<()> {
        self.check_columns(d)?;
        if d.n_rows() != self.fingerprint.n_rows || data_digest(d) != self.fingerprint.data_digest {
            return Err(Error::Contract(
                "dataset is not the one this forest was trained on".into(),
            ));
        }
        Ok(())
    }

    /// Out-of-bag rows per tree, each ascending.
    fn oob_rows(&self, n: usize) -> Vec<Vec<usize>> {
        self.inbag
            .par_iter()
            .map(|inbag| {
                let mut used = vec![false; n];
                for &r in inbag {
                    used[r] = true;
                }
                (0..n).filter(|&r| !used[r]).collect()
            })
            .collect()
    }

    /// Per-tree `(row, prediction)` pairs over the out-of-bag rows.
    fn oob_tree_predictions(&self, d: &Dataset, upto: usize) -> Vec<Vec<(usize, f64)>> {
        let oob = self.oob_rows(d.n_rows());
        self.trees[..upto]
            .par_iter()
            .zip(&oob[..upto])
            .map(|(tree, rows)| {
                rows.iter()
                    .map(|&r| (r, tree.predict_row(d.row(r))))
                    .collect()
            })
            .collect()
    }

    pub fn oob_predict(&self, d: &Dataset) -> Result<OobPredictions> {
        self.check_fingerprint(d)?;
        let n = d.n_rows();
        let mut sums = vec![0.0; n];
        let mut counts = vec![0usize; n];
        for preds in self.oob_tree_predictions(d, self.trees.len()) {
            for (r, p) in preds {
                sums[r] += p;
                counts[r] += 1;
            }
        }
        let predictions: Vec<Option<f64>> = sums
            .iter()
            .zip(&counts)
            .map(|(&s, &c)| (c > 0).then(|| s / c as f64))
            .collect();
        let covered = counts.iter().filter(|&&c| c > 0).count();
        Ok(OobPredictions {
            predictions,
            trees_per_row: counts,
            coverage: covered as f64 / n as f64,
        })
    }

    pub fn evaluate(&self, d: &Dataset) -> Result<EvalMetrics> {
        let oob = self.oob_predict(d)?;
        let fitted = self.predict_dataset(d)?;
        let rmse_in_sample = rmse(fitted.iter().zip(d.y()).map(|(p, y)| p - y)).unwrap_or(0.0);
        let rmse_oob = rmse(
            oob.predictions
                .iter()
                .zip(d.y())
                .filter_map(|(p, y)| p.map(|p| p - y)),
        );
        Ok(EvalMetrics {
            rmse_in_sample,
            rmse_oob,
            oob_coverage: oob.coverage,
        })
    }

    /// Out-of-bag MSE of the first `k` trees for each checkpoint `k`.
    pub fn oob_mse_curve(
        &self,
        d: &Dataset,
        checkpoints: &[usize],
    ) -> Result<Vec<(usize, Option<f64>)>> {
        self.check_fingerprint(d)?;
        if checkpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config(
                "checkpoints must be strictly increasing".into(),
            ));
        }
        if let Some(&bad) = checkpoints
            .iter()
            .find(|&&c| c == 0 || c > self.trees.len())
        {
            return Err(Error::Config(format!(
                "checkpoint {bad} outside 1..={}",
                self.trees.len()
            )));
        }
        let upto = checkpoints.last().copied().unwrap_or(0);
        let per_tree = self.oob_tree_predictions(d, upto);
        let n = d.n_rows();
        let mut sums = vec![0.0; n];
        let mut counts = vec![0usize; n];
        let mut curve = Vec::with_capacity(checkpoints.len());
        let mut next = checkpoints.iter().peekable();
        for (i, preds) in per_tree.into_iter().enumerate() {
            for (r, p) in preds {
                sums[r] += p;
                counts[r] += 1;
            }
            if next.peek() == Some(&&(i + 1)) {
                next.next();
                let mse = mse((0..n)
                    .filter(|&r| counts[r] > 0)
                    .map(|r| sums[r] / counts[r] as f64 - d.y()[r]));
                curve.push((i + 1, mse));
            }
        }
        Ok(curve)
    }

    pub fn to_json(&self) -> Result<String> {
        to_sorted_json(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(text)?;
        if m.trees.len() != m.inbag.len() || m.trees.is_empty() {
            return Err(Error::Schema(
                "model has mismatched trees and inbag lists".into(),
            ));
        }
        Ok(m)
    }
}

fn mse(errors: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = errors.fold((0.0, 0usize), |(s, n), e| (s + e * e, n + 1));
    (n > 0).then(|| sum / n as f64)
}

pub(crate) fn rmse(errors: impl Iterator<Item = f64>) -> Option<f64> {
    mse(errors).map(f64::sqrt)
}

pub fn predict(m: &ForestModel, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
    m.predict(rows)
}

pub fn oob_predict(m: &ForestModel, d: &Dataset) -> Result<OobPredictions> {
    m.oob_predict(d)
}

pub fn evaluate(m: &ForestModel, d: &Dataset) -> Result<EvalMetrics> {
    m.evaluate(d)
}

/// Fits a forest and returns its out-of-bag MSE at each prefix size.
pub fn mse_curve(
    d: &Dataset,
    cfg: &ForestConfig,
    checkpoints: &[usize],
) -> Result<Vec<(usize, Option<f64>)>> {
    if let Some(&last) = checkpoints.last() {
        if last > cfg.n_trees {
            return Err(Error::Config(format!(
                "checkpoint {last} exceeds n_trees {}",
                cfg.n_trees
            )));
        }
    }
    fit_forest(d, cfg)?.oob_mse_curve(d, checkpoints)
}
