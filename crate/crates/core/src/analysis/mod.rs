//! Everything downstream of fitted models: predictor importance, partial effects,
//! forecasting datasets, comparison tables and subsample studies.

mod forecast;
mod importance;
mod partial;
mod table;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

pub use forecast::{make_forecast_dataset, ForecastSpec, STANDARD_HORIZONS};
pub use importance::{importance, render_importance_table, ImportanceReport};
pub use partial::{
    default_grid, least_squares_slope, linspace, partial_effect_1d, partial_effect_2d,
    PartialEffectGrid, DEFAULT_GRID_POINTS,
};
pub use table::{compare, EvalRow, EvalTable, TableLayout};

use crate::dataio::{filter_dates, Dataset};
use crate::error::{Error, Result};
use crate::forest::{fit_forest, ForestConfig};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateRange {
    pub name: String,
    pub from: NaiveDate,
    pub to: NaiveDate,
}

/// Refits the forest on each date range and reports its importance.
///
/// Ranges that select no rows are skipped with a warning and reported as `None`.
pub fn subsample_study(
    d: &Dataset,
    ranges: &[DateRange],
    cfg: &ForestConfig,
) -> Result<Vec<(String, Option<ImportanceReport>)>> {
    let mut out = Vec::with_capacity(ranges.len());
    for range in ranges {
        let subset = match filter_dates(d, range.from, range.to) {
            Ok(s) => s,
            Err(Error::EmptyRange { .. }) => {
                log::warn!("date range `{}` selects no rows; skipped", range.name);
                out.push((range.name.clone(), None));
                continue;
            }
            Err(e) => return Err(e),
        };
        let model = fit_forest(&subset, cfg)?;
        out.push((range.name.clone(), Some(importance(&model))));
    }
    Ok(out)
}
