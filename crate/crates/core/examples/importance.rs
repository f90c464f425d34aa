//! Predictor importance for the full sample and for two sub-periods.

use oilforest::analysis::{importance, render_importance_table, subsample_study, DateRange};
use oilforest::forest::{fit_forest, ForestConfig};
use oilforest::synthgen::{generate, DgpConfig};

fn main() -> oilforest::Result<()> {
    let d = generate(&DgpConfig::default())?.dataset;
    let cfg = ForestConfig {
        n_trees: 200,
        seed: 7,
        ..ForestConfig::default()
    };
    let full = importance(&fit_forest(&d, &cfg)?);

    let split = d.dates()[d.n_rows() / 2];
    let ranges = [
        DateRange {
            name: "first half".into(),
            from: d.dates()[0],
            to: split,
        },
        DateRange {
            name: "second half".into(),
            from: split.succ_opt().expect("date"),
            to: *d.dates().last().expect("rows"),
        },
    ];
    let mut columns = vec![("full sample".to_string(), Some(full))];
    columns.extend(subsample_study(&d, &ranges, &cfg)?);
    print!("{}", render_importance_table(&columns));
    Ok(())
}
