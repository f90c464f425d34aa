//! Synthetic panels from a known response function.
//!
//! Features are stationary Gaussian AR(1) processes with unit variance. The
//! response is a sum of linear terms, a one-sided hinge `coef * max(0, -x_c)`,
//! a pairwise product `coef * x_a * x_b` and an optional term that only switches
//! on after a break row. The noiseless response is returned alongside the data
//! so tests can compare fitted models to the truth.

use std::collections::BTreeMap;

use chrono::{Datelike, NaiveDate, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataio::{DailyPanel, Dataset, MOMENTUM_FEATURE};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hinge {
    pub feature: usize,
    pub coef: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interaction {
    pub a: usize,
    pub b: usize,
    pub coef: f64,
}

/// `coef * x_feature`, active only from row `start_row` on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeTerm {
    pub feature: usize,
    pub start_row: usize,
    pub coef: f64,
}

/// Missing JSON keys take their values from the default benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DgpConfig {
    pub n_rows: usize,
    pub seed: u64,
    pub feature_names: Vec<String>,
    /// One coefficient per feature.
    pub linear: Vec<f64>,
    pub hinge: Option<Hinge>,
    pub interaction: Option<Interaction>,
    pub regime: Option<RegimeTerm>,
    pub noise_std: f64,
    /// First-order autocorrelation of every feature process.
    pub autocorrelation: f64,
    pub start_date: NaiveDate,
    pub target_name: Option<String>,
}

/// Feature names of the default benchmark, one per explanatory factor.
pub const BENCHMARK_FEATURES: [&str; 11] = [
    "usd",
    "vix",
    "ust2y",
    "cesi_ae",
    "cesi_eme",
    "pmi_ae",
    "pmi_eme",
    "pce_core",
    "pnfc",
    "covid",
    MOMENTUM_FEATURE,
];

impl Default for DgpConfig {
    /// The desk-scale benchmark: 3,144 rows, 11 features, `cesi_ae` and `cesi_eme`
    /// absent from the response, a hinge on `covid` and a `vix * ust2y` product.
    fn default() -> Self {
        Self {
            n_rows: 3144,
            seed: 2022,
            feature_names: BENCHMARK_FEATURES.iter().map(|s| s.to_string()).collect(),
            linear: vec![-0.5, -0.3, 0.4, 0.0, 0.0, 0.2, 0.3, 0.1, 0.4, 0.3, 0.2],
            hinge: Some(Hinge {
                feature: 9,
                coef: 2.0,
            }),
            interaction: Some(Interaction {
                a: 1,
                b: 2,
                coef: 1.0,
            }),
            regime: None,
            noise_std: 0.5,
            autocorrelation: 0.9,
            start_date: NaiveDate::from_ymd_opt(2010, 1, 4).expect("valid date"),
            target_name: None,
        }
    }
}

impl DgpConfig {
    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn target_name(&self) -> &str {
        self.target_name.as_deref().unwrap_or("brent")
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.n_features();
        if self.n_rows == 0 || d == 0 {
            return Err(Error::Config(
                "synthetic data needs rows and features".into(),
            ));
        }
        if self.linear.len() != d {
            return Err(Error::Config(format!(
                "{} linear coefficients for {d} features",
                self.linear.len()
            )));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::Config(
                "noise_std must be finite and non-negative".into(),
            ));
        }
        if self.autocorrelation.is_nan() || self.autocorrelation.abs() >= 1.0 {
            return Err(Error::Config("autocorrelation must lie in (-1, 1)".into()));
        }
        let in_range = |i: usize| {
            if i < d {
                Ok(())
            } else {
                Err(Error::Config(format!(
                    "feature index {i} out of range for {d} features"
                )))
            }
        };
        if let Some(h) = self.hinge {
            in_range(h.feature)?;
        }
        if let Some(ix) = self.interaction {
            in_range(ix.a)?;
            in_range(ix.b)?;
            if ix.a == ix.b {
                return Err(Error::Config(
                    "interaction needs two distinct features".into(),
                ));
            }
        }
        if let Some(r) = self.regime {
            in_range(r.feature)?;
        }
        let mut names = self.feature_names.clone();
        names.sort();
        names.dedup();
        if names.len() != d {
            return Err(Error::Config("feature names must be unique".into()));
        }
        Ok(())
    }

    pub fn truth(&self) -> TrueFunction {
        TrueFunction {
            linear: self.linear.clone(),
            hinge: self.hinge,
            interaction: self.interaction,
            regime: self.regime,
        }
    }
}

/// The noiseless response of a [`DgpConfig`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueFunction {
    pub linear: Vec<f64>,
    pub hinge: Option<Hinge>,
    pub interaction: Option<Interaction>,
    pub regime: Option<RegimeTerm>,
}

impl TrueFunction {
    /// Response at `x` ignoring any regime term.
    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut f: f64 = self.linear.iter().zip(x).map(|(b, v)| b * v).sum();
        if let Some(h) = self.hinge {
            f += h.coef * (-x[h.feature]).max(0.0);
        }
        if let Some(ix) = self.interaction {
            f += ix.coef * x[ix.a] * x[ix.b];
        }
        f
    }

    /// Response at `x` for data row `row`.
    pub fn eval_at(&self, x: &[f64], row: usize) -> f64 {
        let mut f = self.eval(x);
        if let Some(r) = self.regime {
            if row >= r.start_row {
                f += r.coef * x[r.feature];
            }
        }
        f
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub dataset: Dataset,
    pub truth: TrueFunction,
    /// Realized noise; `target[i] == truth.eval_at(row_i, i) + noise[i]`.
    pub noise: Vec<f64>,
}

/// Consecutive weekdays starting at the first weekday on or after `start`.
pub fn business_days(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(n);
    let mut day = start;
    while out.len() < n {
        if !matches!(day.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(day);
        }
        day = day.succ_opt().expect("date in range");
    }
    out
}

/// Unit-variance AR(1) paths, row-major `len x d`.
fn feature_paths(rng: &mut ChaCha8Rng, len: usize, d: usize, phi: f64) -> Vec<f64> {
    let innovation = (1.0 - phi * phi).sqrt();
    let mut x = Vec::with_capacity(len * d);
    for t in 0..len {
        for j in 0..d {
            let e: f64 = rng.sample(StandardNormal);
            let v = if t == 0 {
                e
            } else {
                phi * x[(t - 1) * d + j] + innovation * e
            };
            x.push(v);
        }
    }
    x
}

/// Draws a dataset whose target is `f(x) + noise`, row by row.
pub fn generate(cfg: &DgpConfig) -> Result<SyntheticData> {
    cfg.validate()?;
    let (n, d) = (cfg.n_rows, cfg.n_features());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let x = feature_paths(&mut rng, n, d, cfg.autocorrelation);
    let truth = cfg.truth();
    let mut noise = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for t in 0..n {
        let e = cfg.noise_std * rng.sample::<f64, _>(StandardNormal);
        noise.push(e);
        y.push(truth.eval_at(&x[t * d..(t + 1) * d], t) + e);
    }
    let dataset = Dataset::new(
        business_days(cfg.start_date, n),
        cfg.feature_names.clone(),
        x,
        y,
        cfg.target_name(),
    )?;
    Ok(SyntheticData {
        dataset,
        truth,
        noise,
    })
}

/// A synthetic price path and the window-change dataset built from it.
#[derive(Debug, Clone)]
pub struct PricePath {
    pub dataset: Dataset,
    /// Price level of the target, on the full daily calendar.
    pub panel: DailyPanel,
    pub truth: TrueFunction,
}

/// Daily log returns `f(x_t) / window + noise` accumulated into a price level.
///
/// The dataset holds the drivers `x_t` as features, the `window`-row log change of
/// the price as target and, in place of the `momentum` driver, the preceding
/// window's log change. With persistent drivers the future change of the price is
/// predictable from today's features, which is what the forecasting datasets use.
pub fn generate_price_path(cfg: &DgpConfig, window: usize) -> Result<PricePath> {
    cfg.validate()?;
    if window == 0 {
        return Err(Error::Config("window must be at least 1".into()));
    }
    let (n, d) = (cfg.n_rows, cfg.n_features());
    let len = n + 2 * window;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut x = feature_paths(&mut rng, len, d, cfg.autocorrelation);
    let momentum = cfg.feature_index(MOMENTUM_FEATURE);
    if let Some(m) = momentum {
        for t in 0..len {
            x[t * d + m] = 0.0;
        }
    }
    let truth = cfg.truth();
    let daily_noise = cfg.noise_std / (window as f64).sqrt();
    let mut log_price = Vec::with_capacity(len);
    let mut level = 70f64.ln();
    for t in 0..len {
        let e: f64 = rng.sample(StandardNormal);
        level += truth.eval_at(&x[t * d..(t + 1) * d], t) / window as f64 + daily_noise * e;
        log_price.push(level);
    }

    let mut rows = Vec::with_capacity(n * d);
    let mut y = Vec::with_capacity(n);
    for t in 2 * window..len {
        let mut row = x[t * d..(t + 1) * d].to_vec();
        if let Some(m) = momentum {
            row[m] = log_price[t - window] - log_price[t - 2 * window];
        }
        rows.extend(row);
        y.push(log_price[t] - log_price[t - window]);
    }
    let calendar = business_days(cfg.start_date, len);
    let dataset = Dataset::new(
        calendar[2 * window..].to_vec(),
        cfg.feature_names.clone(),
        rows,
        y,
        cfg.target_name(),
    )?;
    let mut columns = BTreeMap::new();
    columns.insert(
        cfg.target_name().to_string(),
        log_price.iter().map(|v| v.exp()).collect(),
    );
    let panel = DailyPanel::new(calendar, columns)?;
    Ok(PricePath {
        dataset,
        panel,
        truth,
    })
}
