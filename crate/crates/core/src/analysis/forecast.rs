use serde::{Deserialize, Serialize};

use crate::dataio::{DailyPanel, Dataset};
use crate::error::{Error, Result};

/// One-, two- and three-month horizons in business days.
pub const STANDARD_HORIZONS: [usize; 3] = [22, 44, 66];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForecastSpec {
    pub horizon: usize,
}

impl ForecastSpec {
    pub fn new(horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::Config("forecast horizon must be at least 1".into()));
        }
        Ok(Self { horizon })
    }

    /// "1 month ahead" for multiples of 22 rows, "N days ahead" otherwise.
    pub fn label(&self) -> String {
        match self.horizon {
            22 => "1 month ahead".into(),
            h if h % 22 == 0 => format!("{} months ahead", h / 22),
            h => format!("{h} days ahead"),
        }
    }
}

/// Replaces the target with the forward log change `ln P_{t+h} - ln P_t`.
///
/// `P` is column `price` of `panel`, and every dataset date must lie on the panel
/// calendar. Rows whose horizon runs past the end of the panel are dropped.
pub fn make_forecast_dataset(
    d: &Dataset,
    spec: ForecastSpec,
    panel: &DailyPanel,
    price: &str,
) -> Result<Dataset> {
    ForecastSpec::new(spec.horizon)?;
    let levels = panel
        .column(price)
        .ok_or_else(|| Error::Config(format!("panel has no column `{price}`")))?;
    let h = spec.horizon;
    let mut keep = Vec::with_capacity(d.n_rows());
    let mut target = Vec::with_capacity(d.n_rows());
    for (i, &date) in d.dates().iter().enumerate() {
        let t = panel.position(date).ok_or_else(|| Error::Coverage {
            series: price.to_string(),
            message: format!("dataset date {date} is not on the panel calendar"),
        })?;
        if t + h >= levels.len() {
            continue;
        }
        for (idx, v) in [(t, levels[t]), (t + h, levels[t + h])] {
            if v.is_nan() || v <= 0.0 {
                return Err(Error::Domain {
                    variable: price.to_string(),
                    date: panel.calendar()[idx],
                    value: v,
                });
            }
        }
        keep.push(i);
        target.push(levels[t + h].ln() - levels[t].ln());
    }
    if keep.is_empty() {
        return Err(Error::Coverage {
            series: price.to_string(),
            message: format!("horizon {h} runs past the end of the panel for every row"),
        });
    }
    d.select_rows(&keep)?
        .with_target(target, format!("{}_h{h}", d.target_name()))
}
