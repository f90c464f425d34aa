//! Fits the benchmark forest and compares it with the OLS and AR(1) baselines.

use oilforest::analysis::{compare, EvalTable, TableLayout};
use oilforest::forest::{fit_forest, ForestConfig};
use oilforest::linear::{fit_ar1, fit_ols};
use oilforest::synthgen::{generate, DgpConfig};

fn main() -> oilforest::Result<()> {
    let d = generate(&DgpConfig::default())?.dataset;
    let cfg = ForestConfig {
        n_trees: 300,
        seed: 42,
        ..ForestConfig::default()
    };
    let forest = fit_forest(&d, &cfg)?;
    let metrics = forest.evaluate(&d)?;
    println!("out-of-bag coverage {:.3}", metrics.oob_coverage);

    let mut table = EvalTable::new(TableLayout::Fit);
    table.push(compare(
        &forest,
        &fit_ols(&d)?,
        &fit_ar1(&d)?,
        &d,
        "benchmark",
    )?);
    print!("{}", table.render());
    Ok(())
}
