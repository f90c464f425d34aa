//! From raw series files to a fitted, evaluated forest.

mod support;

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{Datelike, NaiveDate, Weekday};
use oilforest::dataio::{
    align_and_interpolate, build_features, load_series, write_series, Dataset, RawSeries,
    TransformSpec, MOMENTUM_FEATURE,
};
use oilforest::experiment::{execute, Command, DataSource, ExperimentConfig, SweepConfig};
use oilforest::forest::{fit_forest, ForestConfig};
use oilforest::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SPEC: &str = r#"{
    "window": 22,
    "momentum": true,
    "brent": {"transform": "log", "role": "target"},
    "wti": {"transform": "log", "role": "feature"},
    "usd": {"transform": "log", "role": "feature"},
    "ust2y": {"transform": "level", "role": "feature"},
    "pmi": {"transform": "level", "role": "feature"},
    "covid": {"transform": "zero_safe_log", "role": "feature"}
}"#;

fn weekdays(n: usize) -> Vec<NaiveDate> {
    let mut day = NaiveDate::from_ymd_opt(2019, 1, 1).unwrap();
    let mut out = Vec::new();
    while out.len() < n {
        if !matches!(day.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(day);
        }
        day = day.succ_opt().unwrap();
    }
    out
}

/// Writes a small synthetic market panel: daily prices and rates, a monthly PMI
/// and a smoothed death count that is zero for the first year.
fn write_inputs(dir: &Path, n: usize) -> BTreeMap<String, std::path::PathBuf> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let days = weekdays(n);
    let walk = |rng: &mut ChaCha8Rng, start: f64, step: f64| -> Vec<f64> {
        let mut v = start;
        (0..n)
            .map(|_| {
                v += rng.random_range(-step..step);
                v
            })
            .collect()
    };
    let usd = walk(&mut rng, 4.6, 0.004);
    let ust2y = walk(&mut rng, 2.0, 0.03);
    let brent: Vec<f64> = (0..n)
        .map(|t| {
            4.2 - 2.0 * (usd[t] - 4.6) - 0.1 * (ust2y[t] - 2.0)
                + 0.002 * rng.random_range(-1.0..1.0)
        })
        .map(f64::exp)
        .collect();
    let wti: Vec<f64> = brent.iter().map(|b| b * 0.95).collect();
    let covid: Vec<f64> = (0..n)
        .map(|t| {
            if t < 260 {
                0.0
            } else {
                100.0 + 5.0 * (t - 260) as f64
            }
        })
        .collect();

    let mut series = vec![
        ("brent", days.iter().copied().zip(brent).collect::<Vec<_>>()),
        ("wti", days.iter().copied().zip(wti).collect()),
        (
            "usd",
            days.iter()
                .copied()
                .zip(usd.iter().map(|v| v.exp()))
                .collect(),
        ),
        ("ust2y", days.iter().copied().zip(ust2y).collect()),
        ("covid", days.iter().copied().zip(covid).collect()),
    ];
    let mut month = NaiveDate::from_ymd_opt(2018, 12, 1).unwrap();
    let mut pmi = Vec::new();
    while month <= *days.last().unwrap() + chrono::Days::new(31) {
        pmi.push((month, 50.0 + rng.random_range(-3.0..3.0)));
        month = month.checked_add_months(chrono::Months::new(1)).unwrap();
    }
    series.push(("pmi", pmi));

    let mut files = BTreeMap::new();
    for (name, obs) in series {
        let path = dir.join(format!("{name}.csv"));
        write_series(&path, &RawSeries::new(name, obs).unwrap()).unwrap();
        files.insert(name.to_string(), path);
    }
    files
}

#[test]
fn series_to_forest() {
    let dir = tempfile::tempdir().unwrap();
    let files = write_inputs(dir.path(), 400);
    let series: Vec<RawSeries> = files
        .iter()
        .map(|(n, p)| load_series(p, n).unwrap())
        .collect();
    assert!(series
        .iter()
        .find(|s| s.name == "pmi")
        .unwrap()
        .is_low_frequency());
    let panel = align_and_interpolate(&series, "brent").unwrap();
    assert_eq!(panel.len(), 400);

    let spec = TransformSpec::from_json(SPEC).unwrap();
    let d = build_features(&panel, &spec, "brent").unwrap();
    assert_eq!(d.n_rows(), 400 - 44);
    assert_eq!(
        d.feature_names(),
        ["covid", "pmi", "usd", "ust2y", "wti", MOMENTUM_FEATURE]
    );
    let covid = d.feature_index("covid").unwrap();
    // zero before the first death, exactly
    assert!(d.column(covid)[..200].iter().all(|&v| v == 0.0));

    let cfg = ForestConfig {
        n_trees: 50,
        seed: 1,
        ..ForestConfig::default()
    };
    let m = fit_forest(&d, &cfg).unwrap();
    let metrics = m.evaluate(&d).unwrap();
    assert!(metrics.rmse_in_sample < metrics.rmse_oob.unwrap());

    let csv = dir.path().join("dataset.csv");
    d.write_csv(&csv).unwrap();
    let back = Dataset::read_csv(&csv).unwrap();
    assert_eq!(back.x(), d.x());
    assert_eq!(back.y(), d.y());
}

#[test]
fn alternative_target_uses_the_same_spec() {
    let dir = tempfile::tempdir().unwrap();
    let files = write_inputs(dir.path(), 200);
    let series: Vec<RawSeries> = files
        .iter()
        .map(|(n, p)| load_series(p, n).unwrap())
        .collect();
    let panel = align_and_interpolate(&series, "brent").unwrap();
    let spec = TransformSpec::from_json(SPEC)
        .unwrap()
        .with_target("wti")
        .unwrap();
    let d = build_features(&panel, &spec, "wti").unwrap();
    assert_eq!(d.target_name(), "wti");
    assert!(d.feature_index("wti").is_none());
    assert!(d.feature_index("brent").is_none());
}

fn experiment(dir: &Path, files: BTreeMap<String, std::path::PathBuf>) -> ExperimentConfig {
    let spec_path = dir.join("spec.json");
    std::fs::write(&spec_path, SPEC).unwrap();
    ExperimentConfig {
        data: DataSource::Series {
            files,
            transform_spec: spec_path,
            calendar: "brent".into(),
        },
        forest: ForestConfig {
            n_trees: 30,
            seed: 4,
            ..ForestConfig::default()
        },
        target: None,
        date_ranges: vec![],
        horizons: vec![22, 44],
        pdp: vec![],
        sweep: SweepConfig::default(),
        mse_checkpoints: vec![],
        output_dir: dir.join("out"),
    }
}

#[test]
fn experiment_from_series_files() {
    let dir = tempfile::tempdir().unwrap();
    let files = write_inputs(dir.path(), 420);
    let before: Vec<Vec<u8>> = files.values().map(|p| std::fs::read(p).unwrap()).collect();
    let cfg = experiment(dir.path(), files.clone());

    let written = execute(Command::Ingest, &cfg).unwrap();
    assert_eq!(written.len(), 3);
    let written = execute(Command::Run, &cfg).unwrap();
    for f in [
        "eval_table.txt",
        "forecast_table.txt",
        "importance.csv",
        "mse_curve.csv",
        "model.json",
        "manifest.json",
    ] {
        assert!(written.iter().any(|w| w.to_str() == Some(f)), "{f} missing");
    }
    let table = std::fs::read_to_string(cfg.output_dir.join("forecast_table.txt")).unwrap();
    assert!(table.contains("1 month ahead") && table.contains("2 months ahead"));

    let after: Vec<Vec<u8>> = files.values().map(|p| std::fs::read(p).unwrap()).collect();
    assert_eq!(before, after, "inputs must not be modified");
}

#[test]
fn coverage_gap_fails_the_load_stage() {
    let dir = tempfile::tempdir().unwrap();
    let mut files = write_inputs(dir.path(), 120);
    let usd = load_series(&files["usd"], "usd").unwrap();
    let kept: Vec<_> = usd
        .observations()
        .iter()
        .enumerate()
        .filter(|(i, _)| !(50..60).contains(i))
        .map(|(_, o)| *o)
        .collect();
    let gap = dir.path().join("usd_gap.csv");
    write_series(&gap, &RawSeries::new("usd", kept).unwrap()).unwrap();
    files.insert("usd".into(), gap);
    let cfg = experiment(dir.path(), files);
    let err = execute(Command::Run, &cfg).unwrap_err();
    assert_eq!(err.stage, "load");
    assert!(matches!(err.source, Error::Coverage { .. }));
    assert_eq!(err.exit_code(), 3);
    assert_eq!(std::fs::read_dir(&cfg.output_dir).unwrap().count(), 0);
}
