//! Raw series ingestion and calendar alignment.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Longest run of calendar days a daily series may be forward-filled across.
pub const MAX_FILL_DAYS: i64 = 5;

/// Series whose median spacing exceeds this many days are treated as low-frequency
/// and interpolated instead of forward-filled.
pub const LOW_FREQUENCY_SPACING_DAYS: i64 = 7;

/// One named series of dated observations, dates strictly increasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawSeries {
    pub name: String,
    observations: Vec<(NaiveDate, f64)>,
}

impl RawSeries {
    pub fn new(name: impl Into<String>, observations: Vec<(NaiveDate, f64)>) -> Result<Self> {
        let name = name.into();
        for pair in observations.windows(2) {
            if pair[1].0 == pair[0].0 {
                return Err(Error::Schema(format!(
                    "series `{name}` has duplicate date {}",
                    pair[0].0
                )));
            }
            if pair[1].0 < pair[0].0 {
                return Err(Error::Schema(format!(
                    "series `{name}` dates are not increasing at {}",
                    pair[1].0
                )));
            }
        }
        if let Some((date, value)) = observations.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Domain {
                variable: name,
                date: *date,
                value: *value,
            });
        }
        Ok(Self { name, observations })
    }

    pub fn observations(&self) -> &[(NaiveDate, f64)] {
        &self.observations
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn first_date(&self) -> Option<NaiveDate> {
        self.observations.first().map(|o| o.0)
    }

    pub fn last_date(&self) -> Option<NaiveDate> {
        self.observations.last().map(|o| o.0)
    }

    pub fn dates(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        self.observations.iter().map(|o| o.0)
    }

    /// True when the median spacing between observations exceeds a week.
    pub fn is_low_frequency(&self) -> bool {
        if self.observations.len() < 2 {
            return false;
        }
        let mut gaps: Vec<i64> = self
            .observations
            .windows(2)
            .map(|w| (w[1].0 - w[0].0).num_days())
            .collect();
        gaps.sort_unstable();
        gaps[gaps.len() / 2] > LOW_FREQUENCY_SPACING_DAYS
    }
}

#[derive(Debug, Deserialize)]
struct SeriesRow {
    date: String,
    value: String,
}

/// Reads a `date,value` CSV into a [`RawSeries`].
pub fn load_series(path: impl AsRef<Path>, name: &str) -> Result<RawSeries> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_series(file, path, name)
}

pub(crate) fn read_series<R: std::io::Read>(
    reader: R,
    path: &Path,
    name: &str,
) -> Result<RawSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let parse_err = |line: u64, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };

    let headers = match rdr.headers() {
        Ok(h) => h.clone(),
        Err(e) => {
            let line = e.position().map_or(1, |p| p.line());
            return Err(parse_err(line, e.to_string()));
        }
    };
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(Error::Empty {
            path: path.to_path_buf(),
        });
    }
    if headers.iter().collect::<Vec<_>>() != ["date", "value"] {
        return Err(parse_err(
            1,
            format!(
                "expected header `date,value`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }

    let mut observations = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let row: SeriesRow = record
            .deserialize(Some(&headers))
            .map_err(|e| parse_err(line, e.to_string()))?;
        let date = NaiveDate::parse_from_str(&row.date, "%Y-%m-%d")
            .map_err(|e| parse_err(line, format!("bad date `{}`: {e}", row.date)))?;
        let value: f64 = row
            .value
            .parse()
            .map_err(|e| parse_err(line, format!("bad value `{}`: {e}", row.value)))?;
        if !value.is_finite() {
            return Err(parse_err(line, format!("non-finite value `{}`", row.value)));
        }
        observations.push((date, value));
    }
    if observations.is_empty() {
        return Err(Error::Empty {
            path: path.to_path_buf(),
        });
    }
    RawSeries::new(name, observations)
}

/// Writes a series as `date,value` CSV.
pub fn write_series(path: impl AsRef<Path>, series: &RawSeries) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut wtr = csv::Writer::from_writer(file);
    wtr.write_record(["date", "value"])?;
    for (date, value) in series.observations() {
        wtr.write_record([date.format("%Y-%m-%d").to_string(), value.to_string()])?;
    }
    wtr.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Calendar-aligned daily columns without gaps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyPanel {
    calendar: Vec<NaiveDate>,
    columns: BTreeMap<String, Vec<f64>>,
}

impl DailyPanel {
    pub fn new(calendar: Vec<NaiveDate>, columns: BTreeMap<String, Vec<f64>>) -> Result<Self> {
        if calendar.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Schema(
                "panel calendar must be strictly increasing".into(),
            ));
        }
        for (name, col) in &columns {
            if col.len() != calendar.len() {
                return Err(Error::Schema(format!(
                    "column `{name}` has {} values for a calendar of {}",
                    col.len(),
                    calendar.len()
                )));
            }
            if let Some(i) = col.iter().position(|v| !v.is_finite()) {
                return Err(Error::Domain {
                    variable: name.clone(),
                    date: calendar[i],
                    value: col[i],
                });
            }
        }
        Ok(Self { calendar, columns })
    }

    pub fn calendar(&self) -> &[NaiveDate] {
        &self.calendar
    }

    pub fn len(&self) -> usize {
        self.calendar.len()
    }

    pub fn is_empty(&self) -> bool {
        self.calendar.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns.get(name).map(Vec::as_slice)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.columns.keys().map(String::as_str)
    }

    /// Row index of `date` on the calendar.
    pub fn position(&self, date: NaiveDate) -> Option<usize> {
        self.calendar.binary_search(&date).ok()
    }
}

/// Aligns every series onto the dates of `calendar_source`.
///
/// Daily series are joined by exact date, carrying the last observation forward
/// across gaps of at most [`MAX_FILL_DAYS`] calendar days. Low-frequency series are
/// interpolated linearly in calendar time between observations and held flat
/// beyond their first and last observation.
pub fn align_and_interpolate(series: &[RawSeries], calendar_source: &str) -> Result<DailyPanel> {
    let source = series
        .iter()
        .find(|s| s.name == calendar_source)
        .ok_or_else(|| {
            Error::Config(format!(
                "calendar source `{calendar_source}` is not among the series"
            ))
        })?;
    let calendar: Vec<NaiveDate> = source.dates().collect();
    let (Some(&start), Some(&end)) = (calendar.first(), calendar.last()) else {
        return Err(Error::Coverage {
            series: calendar_source.to_string(),
            message: "calendar source has no observations".into(),
        });
    };

    let mut columns = BTreeMap::new();
    for s in series {
        if columns.contains_key(&s.name) {
            return Err(Error::Schema(format!("series `{}` given twice", s.name)));
        }
        let (first, last) = match (s.first_date(), s.last_date()) {
            (Some(f), Some(l)) => (f, l),
            _ => {
                return Err(Error::Coverage {
                    series: s.name.clone(),
                    message: "no observations".into(),
                })
            }
        };
        if last < start || first > end {
            return Err(Error::Coverage {
                series: s.name.clone(),
                message: format!(
                    "observations {first}..{last} do not overlap calendar {start}..{end}"
                ),
            });
        }
        let column = if s.is_low_frequency() {
            interpolate_onto(s, &calendar)
        } else {
            fill_onto(s, &calendar)?
        };
        columns.insert(s.name.clone(), column);
    }
    DailyPanel::new(calendar, columns)
}

fn fill_onto(series: &RawSeries, calendar: &[NaiveDate]) -> Result<Vec<f64>> {
    let obs = series.observations();
    let mut out = Vec::with_capacity(calendar.len());
    let mut uncovered = Vec::new();
    let mut cursor = 0usize;
    for &date in calendar {
        while cursor < obs.len() && obs[cursor].0 <= date {
            cursor += 1;
        }
        // obs[cursor - 1] is the latest observation on or before `date`
        match cursor.checked_sub(1).map(|i| obs[i]) {
            Some((d, v)) if (date - d).num_days() <= MAX_FILL_DAYS => out.push(v),
            _ => {
                uncovered.push(date);
                out.push(f64::NAN);
            }
        }
    }
    if uncovered.is_empty() {
        Ok(out)
    } else {
        let listed: Vec<String> = uncovered.iter().take(10).map(|d| d.to_string()).collect();
        let more = uncovered.len().saturating_sub(listed.len());
        Err(Error::Coverage {
            series: series.name.clone(),
            message: format!(
                "no observation within {MAX_FILL_DAYS} days for {}{}",
                listed.join(", "),
                if more > 0 {
                    format!(" and {more} more")
                } else {
                    String::new()
                }
            ),
        })
    }
}

fn interpolate_onto(series: &RawSeries, calendar: &[NaiveDate]) -> Vec<f64> {
    let obs = series.observations();
    let mut out = Vec::with_capacity(calendar.len());
    let mut hi = 0usize;
    for &date in calendar {
        while hi < obs.len() && obs[hi].0 < date {
            hi += 1;
        }
        let value = if hi == 0 {
            obs[0].1
        } else if hi == obs.len() {
            obs[obs.len() - 1].1
        } else if obs[hi].0 == date {
            obs[hi].1
        } else {
            let (d0, v0) = obs[hi - 1];
            let (d1, v1) = obs[hi];
            let span = (d1 - d0).num_days() as f64;
            let offset = (date - d0).num_days() as f64;
            v0 + (v1 - v0) * offset / span
        };
        out.push(value);
    }
    out
}
