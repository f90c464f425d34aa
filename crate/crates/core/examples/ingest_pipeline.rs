//! Raw `date,value` files to a modeling dataset: alignment to the target's
//! calendar, interpolation of a monthly series and window-change features.

use chrono::{Datelike, NaiveDate, Weekday};
use oilforest::dataio::{
    align_and_interpolate, build_features, load_series, summarize, write_series, RawSeries,
    TransformSpec,
};

const SPEC: &str = r#"{
    "window": 22,
    "brent": {"transform": "log", "role": "target"},
    "usd": {"transform": "log", "role": "feature"},
    "pmi": {"transform": "level", "role": "feature"}
}"#;

fn main() -> oilforest::Result<()> {
    let dir = std::env::temp_dir().join("oilforest-ingest-example");
    std::fs::create_dir_all(&dir).map_err(|e| oilforest::Error::io(&dir, e))?;

    let mut day = NaiveDate::from_ymd_opt(2021, 1, 4).expect("valid date");
    let mut days = Vec::new();
    while days.len() < 250 {
        if !matches!(day.weekday(), Weekday::Sat | Weekday::Sun) {
            days.push(day);
        }
        day = day.succ_opt().expect("date");
    }
    let usd: Vec<(NaiveDate, f64)> = days
        .iter()
        .enumerate()
        .map(|(t, &d)| (d, 100.0 + (t as f64 / 15.0).sin()))
        .collect();
    let brent: Vec<(NaiveDate, f64)> = usd
        .iter()
        .map(|&(d, u)| (d, 70.0 * (1.0 - 0.03 * (u - 100.0))))
        .collect();
    let pmi: Vec<(NaiveDate, f64)> = (0..13)
        .map(|m| {
            (
                NaiveDate::from_ymd_opt(2021, 1, 1)
                    .expect("date")
                    .checked_add_months(chrono::Months::new(m))
                    .expect("date"),
                50.0 + m as f64 % 4.0,
            )
        })
        .collect();

    let mut series = Vec::new();
    for (name, obs) in [("brent", brent), ("usd", usd), ("pmi", pmi)] {
        let path = dir.join(format!("{name}.csv"));
        write_series(&path, &RawSeries::new(name, obs)?)?;
        series.push(load_series(&path, name)?);
    }

    let panel = align_and_interpolate(&series, "brent")?;
    let spec = TransformSpec::from_json(SPEC)?;
    let d = build_features(&panel, &spec, "brent")?;
    println!(
        "panel {} days -> dataset {} rows, features {:?}",
        panel.len(),
        d.n_rows(),
        d.feature_names()
    );
    print!("{}", summarize(&d)?.render());
    Ok(())
}
