//! Series ingestion, calendar alignment and feature construction.

mod dataset;
mod features;
mod series;

pub use dataset::{filter_dates, summarize, ColumnStats, Dataset, SummaryStats};
pub use features::{
    build_features, zero_safe_covid_transform, Role, Transform, TransformSpec, VariableSpec,
    DEFAULT_WINDOW, MOMENTUM_FEATURE,
};
pub use series::{
    align_and_interpolate, load_series, write_series, DailyPanel, RawSeries, MAX_FILL_DAYS,
};
