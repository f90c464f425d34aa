//! The modeling table: dated feature rows and a target vector.

use std::collections::HashSet;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Feature matrix (row-major) plus target, one row per date.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    dates: Vec<NaiveDate>,
    feature_names: Vec<String>,
    x: Vec<f64>,
    y: Vec<f64>,
    target_name: String,
}

impl Dataset {
    pub fn new(
        dates: Vec<NaiveDate>,
        feature_names: Vec<String>,
        x: Vec<f64>,
        y: Vec<f64>,
        target_name: impl Into<String>,
    ) -> Result<Self> {
        let n = y.len();
        let d = feature_names.len();
        if dates.len() != n {
            return Err(Error::Schema(format!(
                "{} dates for {n} targets",
                dates.len()
            )));
        }
        if x.len() != n * d {
            return Err(Error::Schema(format!(
                "feature matrix has {} entries, expected {n}x{d}",
                x.len()
            )));
        }
        let mut seen = HashSet::new();
        for name in &feature_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::Schema(format!("duplicate feature name `{name}`")));
            }
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            let (row, col) = (i / d.max(1), i % d.max(1));
            return Err(Error::Domain {
                variable: feature_names[col].clone(),
                date: dates[row],
                value: x[i],
            });
        }
        let target_name = target_name.into();
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain {
                variable: target_name,
                date: dates[i],
                value: y[i],
            });
        }
        Ok(Self {
            dates,
            feature_names,
            x,
            y,
            target_name,
        })
    }

    /// Builds a dataset from feature rows.
    pub fn from_rows(
        dates: Vec<NaiveDate>,
        feature_names: Vec<String>,
        rows: &[Vec<f64>],
        y: Vec<f64>,
        target_name: impl Into<String>,
    ) -> Result<Self> {
        let d = feature_names.len();
        if let Some(bad) = rows.iter().position(|r| r.len() != d) {
            return Err(Error::Schema(format!(
                "row {bad} has {} values, expected {d}",
                rows[bad].len()
            )));
        }
        let x = rows.iter().flatten().copied().collect();
        Self::new(dates, feature_names, x, y, target_name)
    }

    pub fn n_rows(&self) -> usize {
        self.y.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn target_name(&self) -> &str {
        &self.target_name
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.n_features();
        &self.x[i * d..(i + 1) * d]
    }

    #[inline]
    pub fn value(&self, row: usize, feature: usize) -> f64 {
        self.x[row * self.n_features() + feature]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.n_rows()).map(move |i| self.row(i))
    }

    pub fn column(&self, feature: usize) -> Vec<f64> {
        (0..self.n_rows()).map(|i| self.value(i, feature)).collect()
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// Column means of the feature matrix.
    pub fn feature_means(&self) -> Vec<f64> {
        let n = self.n_rows() as f64;
        let mut sums = vec![0.0; self.n_features()];
        for row in self.rows() {
            for (s, v) in sums.iter_mut().zip(row) {
                *s += v;
            }
        }
        sums.into_iter().map(|s| s / n).collect()
    }

    /// Keeps the rows at `indices`, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        let mut x = Vec::with_capacity(indices.len() * self.n_features());
        for &i in indices {
            x.extend_from_slice(self.row(i));
        }
        Self::new(
            indices.iter().map(|&i| self.dates[i]).collect(),
            self.feature_names.clone(),
            x,
            indices.iter().map(|&i| self.y[i]).collect(),
            self.target_name.clone(),
        )
    }

    /// Same rows with a replacement target vector.
    pub fn with_target(&self, y: Vec<f64>, target_name: impl Into<String>) -> Result<Self> {
        Self::new(
            self.dates.clone(),
            self.feature_names.clone(),
            self.x.clone(),
            y,
            target_name,
        )
    }

    /// Keeps only the named features, in the given order.
    pub fn select_features(&self, names: &[&str]) -> Result<Self> {
        let idx = names
            .iter()
            .map(|n| {
                self.feature_index(n)
                    .ok_or_else(|| Error::Contract(format!("unknown feature `{n}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut x = Vec::with_capacity(self.n_rows() * idx.len());
        for row in self.rows() {
            x.extend(idx.iter().map(|&j| row[j]));
        }
        Self::new(
            self.dates.clone(),
            names.iter().map(|s| s.to_string()).collect(),
            x,
            self.y.clone(),
            self.target_name.clone(),
        )
    }

    /// Writes `date,<features...>,target`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv_to(file)?;
        Ok(())
    }

    pub fn write_csv_to<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let mut header = vec!["date".to_string()];
        header.extend(self.feature_names.iter().cloned());
        header.push("target".to_string());
        wtr.write_record(&header)?;
        for i in 0..self.n_rows() {
            let mut rec = Vec::with_capacity(self.n_features() + 2);
            rec.push(self.dates[i].format("%Y-%m-%d").to_string());
            rec.extend(self.row(i).iter().map(f64::to_string));
            rec.push(self.y[i].to_string());
            wtr.write_record(&rec)?;
        }
        wtr.flush().map_err(|e| Error::io("<dataset csv>", e))?;
        Ok(())
    }

    /// Reads the export format written by [`Dataset::write_csv`]; the target is named `target`.
    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut rdr = csv::Reader::from_reader(file);
        let headers = rdr.headers()?.clone();
        let cols: Vec<&str> = headers.iter().collect();
        if cols.len() < 2 || cols[0] != "date" || cols[cols.len() - 1] != "target" {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: 1,
                message: "expected header `date,<features...>,target`".into(),
            });
        }
        let feature_names: Vec<String> = cols[1..cols.len() - 1]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let (mut dates, mut x, mut y) = (Vec::new(), Vec::new(), Vec::new());
        for record in rdr.records() {
            let record = record?;
            let line = record.position().map_or(0, |p| p.line());
            let bad = |message: String| Error::Parse {
                path: path.to_path_buf(),
                line,
                message,
            };
            let date = NaiveDate::parse_from_str(&record[0], "%Y-%m-%d")
                .map_err(|e| bad(format!("bad date `{}`: {e}", &record[0])))?;
            dates.push(date);
            for field in record.iter().skip(1).take(feature_names.len()) {
                x.push(
                    field
                        .parse::<f64>()
                        .map_err(|e| bad(format!("bad value `{field}`: {e}")))?,
                );
            }
            let t = &record[record.len() - 1];
            y.push(
                t.parse::<f64>()
                    .map_err(|e| bad(format!("bad target `{t}`: {e}")))?,
            );
        }
        if y.is_empty() {
            return Err(Error::Empty {
                path: path.to_path_buf(),
            });
        }
        Self::new(dates, feature_names, x, y, "target")
    }
}

/// Rows dated within `from..=to`.
pub fn filter_dates(d: &Dataset, from: NaiveDate, to: NaiveDate) -> Result<Dataset> {
    if from > to {
        return Err(Error::Config(format!(
            "date range start {from} is after end {to}"
        )));
    }
    let keep: Vec<usize> = d
        .dates()
        .iter()
        .enumerate()
        .filter(|(_, &date)| from <= date && date <= to)
        .map(|(i, _)| i)
        .collect();
    if keep.is_empty() {
        return Err(Error::EmptyRange { from, to });
    }
    d.select_rows(&keep)
}

/// Mean, sample standard deviation, min and max of one column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    /// `(column name, stats)` for every feature followed by the target.
    pub columns: Vec<(String, ColumnStats)>,
}

impl SummaryStats {
    pub fn get(&self, name: &str) -> Option<&ColumnStats> {
        self.columns.iter().find(|(n, _)| n == name).map(|(_, s)| s)
    }

    /// Aligned text table with columns `mean  std. dev.  min  max`.
    pub fn render(&self) -> String {
        let width = self
            .columns
            .iter()
            .map(|(n, _)| n.len())
            .max()
            .unwrap_or(0)
            .max(8);
        let mut out = format!(
            "{:<width$}  {:>12}  {:>12}  {:>12}  {:>12}\n",
            "", "mean", "std. dev.", "min", "max"
        );
        for (name, s) in &self.columns {
            out.push_str(&format!(
                "{name:<width$}  {:>12.4}  {:>12.4}  {:>12.4}  {:>12.4}\n",
                s.mean, s.std, s.min, s.max
            ));
        }
        out
    }
}

fn column_stats(values: impl Iterator<Item = f64> + Clone) -> ColumnStats {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let ss: f64 = values.clone().map(|v| (v - mean) * (v - mean)).sum();
    let std = if n > 1.0 {
        (ss / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    let (min, max) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    // rounding can push the mean of a constant column a ulp outside its range
    ColumnStats {
        mean: mean.clamp(min, max),
        std,
        min,
        max,
    }
}

pub fn summarize(d: &Dataset) -> Result<SummaryStats> {
    if d.is_empty() {
        return Err(Error::Contract("cannot summarize an empty dataset".into()));
    }
    let mut columns = Vec::with_capacity(d.n_features() + 1);
    for (j, name) in d.feature_names().iter().enumerate() {
        columns.push((
            name.clone(),
            column_stats((0..d.n_rows()).map(move |i| d.value(i, j))),
        ));
    }
    columns.push((
        d.target_name().to_string(),
        column_stats(d.y().iter().copied()),
    ));
    Ok(SummaryStats { columns })
}
