use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::forest::ForestModel;
use crate::report::write_csv;

/// Split-based predictor importance of a forest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub feature_names: Vec<String>,
    /// Summed SSE reduction over every split on the feature in every tree.
    pub raw: Vec<f64>,
    /// `raw / sum(raw)`; all zero when the report is degenerate.
    pub normalized: Vec<f64>,
    /// No tree split at all, so the scores cannot be normalized.
    pub degenerate: bool,
}

impl ImportanceReport {
    pub fn from_raw(feature_names: Vec<String>, raw: Vec<f64>) -> Self {
        let total: f64 = raw.iter().sum();
        let degenerate = total.is_nan() || total <= 0.0;
        let normalized = if degenerate {
            vec![0.0; raw.len()]
        } else {
            raw.iter().map(|r| r / total).collect()
        };
        Self {
            feature_names,
            raw,
            normalized,
            degenerate,
        }
    }

    pub fn get(&self, feature: &str) -> Option<f64> {
        self.feature_names
            .iter()
            .position(|n| n == feature)
            .map(|j| self.normalized[j])
    }

    /// Feature indices ordered by descending normalized score (stable for ties).
    pub fn ranking(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.raw.len()).collect();
        order.sort_by(|&a, &b| self.normalized[b].total_cmp(&self.normalized[a]));
        order
    }

    /// `feature,raw,normalized`, sorted descending by normalized score.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        write_csv(
            path,
            &["feature", "raw", "normalized"],
            self.ranking().into_iter().map(|j| {
                vec![
                    self.feature_names[j].clone(),
                    self.raw[j].to_string(),
                    self.normalized[j].to_string(),
                ]
            }),
        )
    }
}

pub fn importance(m: &ForestModel) -> ImportanceReport {
    let mut raw = vec![0.0; m.n_features()];
    for tree in &m.trees {
        for (r, t) in raw.iter_mut().zip(tree.sse_reduction()) {
            *r += t;
        }
    }
    ImportanceReport::from_raw(m.feature_names.clone(), raw)
}

/// Side-by-side normalized importances, one column per labelled report, three decimals.
///
/// Rows follow the feature order of the first report; absent reports print `-`.
pub fn render_importance_table(columns: &[(String, Option<ImportanceReport>)]) -> String {
    let Some(names) = columns
        .iter()
        .find_map(|(_, r)| r.as_ref().map(|r| r.feature_names.clone()))
    else {
        return String::new();
    };
    let name_w = names.iter().map(String::len).max().unwrap_or(0).max(7);
    let col_w: Vec<usize> = columns.iter().map(|(l, _)| l.len().max(7)).collect();
    let mut out = format!("{:<name_w$}", "");
    for ((label, _), w) in columns.iter().zip(&col_w) {
        out.push_str(&format!("  {label:>w$}"));
    }
    out.push('\n');
    for name in &names {
        out.push_str(&format!("{name:<name_w$}"));
        for ((_, report), w) in columns.iter().zip(&col_w) {
            let cell = report
                .as_ref()
                .and_then(|r| r.get(name))
                .map_or_else(|| "-".to_string(), |v| format!("{v:.3}"));
            out.push_str(&format!("  {cell:>w$}"));
        }
        out.push('\n');
    }
    out
}
