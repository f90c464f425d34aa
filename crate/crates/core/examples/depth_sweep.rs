//! In-sample and out-of-bag error across minimum node sizes, plus the error
//! curve as trees are added.

use oilforest::analysis::{compare, EvalTable, TableLayout};
use oilforest::forest::{fit_forest, ForestConfig};
use oilforest::linear::{fit_ar1, fit_ols};
use oilforest::synthgen::{generate, DgpConfig};

fn main() -> oilforest::Result<()> {
    let d = generate(&DgpConfig::default())?.dataset;
    let (ols, ar1) = (fit_ols(&d)?, fit_ar1(&d)?);

    let mut table = EvalTable::new(TableLayout::Fit);
    for p in [4, 5, 6, 8, 10, 20, 30, 40] {
        let cfg = ForestConfig {
            n_trees: 100,
            min_split_size: p,
            seed: 1,
            ..ForestConfig::default()
        };
        let forest = fit_forest(&d, &cfg)?;
        table.push(compare(&forest, &ols, &ar1, &d, format!("p={p}"))?);
    }
    print!("{}", table.render());

    let forest = fit_forest(
        &d,
        &ForestConfig {
            n_trees: 200,
            seed: 1,
            ..ForestConfig::default()
        },
    )?;
    for (k, mse) in forest.oob_mse_curve(&d, &[1, 2, 5, 10, 20, 50, 100, 200])? {
        println!("{k:>4} trees  oob mse {:.4}", mse.unwrap_or(f64::NAN));
    }
    Ok(())
}
