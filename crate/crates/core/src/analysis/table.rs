use serde::{Deserialize, Serialize};

use crate::dataio::Dataset;
use crate::error::Result;
use crate::forest::ForestModel;
use crate::linear::{self, LinearModel};
use crate::report::{fmt_opt, ratio, to_sorted_json};

/// How an [`EvalTable`] is rendered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableLayout {
    /// In-sample fit across forest settings: baselines, forest in-sample and
    /// out-of-bag RMSE, and the in-sample ratio to OLS.
    Fit,
    /// One row per horizon: forest in-sample and out-of-sample RMSE and the
    /// out-of-sample ratios to AR(1) and OLS.
    Forecast,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub label: String,
    pub min_split_size: Option<usize>,
    pub n_trees: Option<usize>,
    pub rmse_ar1: Option<f64>,
    pub rmse_ols: Option<f64>,
    pub rmse_in_sample: Option<f64>,
    pub rmse_oob: Option<f64>,
    /// `None` wherever the denominator is zero or missing.
    pub ratio_in_sample_vs_ols: Option<f64>,
    pub ratio_oob_vs_ar1: Option<f64>,
    pub ratio_oob_vs_ols: Option<f64>,
}

impl EvalRow {
    pub fn from_rmses(
        label: impl Into<String>,
        rmse_in_sample: Option<f64>,
        rmse_oob: Option<f64>,
        rmse_ols: Option<f64>,
        rmse_ar1: Option<f64>,
    ) -> Self {
        Self {
            label: label.into(),
            min_split_size: None,
            n_trees: None,
            rmse_ar1,
            rmse_ols,
            rmse_in_sample,
            rmse_oob,
            ratio_in_sample_vs_ols: ratio(rmse_in_sample, rmse_ols),
            ratio_oob_vs_ar1: ratio(rmse_oob, rmse_ar1),
            ratio_oob_vs_ols: ratio(rmse_oob, rmse_ols),
        }
    }

    /// True when every stored ratio equals the quotient of the stored RMSEs.
    pub fn ratios_consistent(&self) -> bool {
        let same = |stored: Option<f64>, num: Option<f64>, den: Option<f64>| match (
            stored,
            ratio(num, den),
        ) {
            (None, None) => true,
            (Some(a), Some(b)) => (a - b).abs() <= 1e-12 * b.abs().max(1e-300),
            _ => false,
        };
        same(
            self.ratio_in_sample_vs_ols,
            self.rmse_in_sample,
            self.rmse_ols,
        ) && same(self.ratio_oob_vs_ar1, self.rmse_oob, self.rmse_ar1)
            && same(self.ratio_oob_vs_ols, self.rmse_oob, self.rmse_ols)
    }
}

/// Forest against the OLS and AR(1) baselines on `d`.
pub fn compare(
    forest: &ForestModel,
    ols: &LinearModel,
    ar1: &LinearModel,
    d: &Dataset,
    label: impl Into<String>,
) -> Result<EvalRow> {
    let metrics = forest.evaluate(d)?;
    let mut row = EvalRow::from_rmses(
        label,
        Some(metrics.rmse_in_sample),
        metrics.rmse_oob,
        Some(linear::rmse(ols, d)?),
        Some(linear::rmse(ar1, d)?),
    );
    row.min_split_size = Some(forest.config.min_split_size);
    row.n_trees = Some(forest.n_trees());
    Ok(row)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalTable {
    pub layout: TableLayout,
    pub rows: Vec<EvalRow>,
}

impl EvalTable {
    pub fn new(layout: TableLayout) -> Self {
        Self {
            layout,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: EvalRow) {
        self.rows.push(row);
    }

    pub fn header(&self) -> Vec<&'static str> {
        match self.layout {
            TableLayout::Fit => vec![
                "min obs / splitting node",
                "no. of reg. trees",
                "AR(1)",
                "OLS",
                "in sample",
                "out of bag",
                "RMSE ratio (rel. OLS)",
            ],
            TableLayout::Forecast => {
                vec![
                    "forecast horizon",
                    "in sample",
                    "out of sample",
                    "AR(1)",
                    "OLS",
                ]
            }
        }
    }

    pub fn cells(&self, row: &EvalRow) -> Vec<String> {
        let count = |v: Option<usize>| v.map_or_else(|| "-".to_string(), |v| v.to_string());
        match self.layout {
            TableLayout::Fit => vec![
                count(row.min_split_size),
                count(row.n_trees),
                fmt_opt(row.rmse_ar1, 4),
                fmt_opt(row.rmse_ols, 4),
                fmt_opt(row.rmse_in_sample, 4),
                fmt_opt(row.rmse_oob, 4),
                fmt_opt(row.ratio_in_sample_vs_ols, 3),
            ],
            TableLayout::Forecast => vec![
                row.label.clone(),
                fmt_opt(row.rmse_in_sample, 3),
                fmt_opt(row.rmse_oob, 3),
                fmt_opt(row.ratio_oob_vs_ar1, 3),
                fmt_opt(row.ratio_oob_vs_ols, 3),
            ],
        }
    }

    /// Right-aligned text table.
    pub fn render(&self) -> String {
        let header = self.header();
        let body: Vec<Vec<String>> = self.rows.iter().map(|r| self.cells(r)).collect();
        let widths: Vec<usize> = (0..header.len())
            .map(|c| {
                body.iter()
                    .map(|r| r[c].len())
                    .chain(std::iter::once(header[c].len()))
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let line = |cells: Vec<String>| {
            let mut s = cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:>w$}"))
                .collect::<Vec<_>>()
                .join("  ");
            s.push('\n');
            s
        };
        let mut out = line(header.iter().map(|s| s.to_string()).collect());
        for row in body {
            out.push_str(&line(row));
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        to_sorted_json(self)
    }
}
