//! Partial effect of the hinge feature and the surface over the interacting pair.
//!
//! Writes `pdp_covid.csv` and `pdp_vix_ust2y.csv` to the directory given as the
//! first argument (default: the system temp directory).

use std::path::PathBuf;

use oilforest::analysis::{
    default_grid, partial_effect_1d, partial_effect_2d, DEFAULT_GRID_POINTS,
};
use oilforest::forest::{fit_forest, ForestConfig};
use oilforest::synthgen::{generate, DgpConfig};

fn main() -> oilforest::Result<()> {
    let out: PathBuf = std::env::args()
        .nth(1)
        .map_or_else(std::env::temp_dir, PathBuf::from);
    let d = generate(&DgpConfig::default())?.dataset;
    let m = fit_forest(
        &d,
        &ForestConfig {
            n_trees: 200,
            seed: 3,
            ..ForestConfig::default()
        },
    )?;

    let grid = default_grid(&d, "covid", DEFAULT_GRID_POINTS)?;
    let curve = partial_effect_1d(&m, &d, "covid", &grid)?;
    for (g, e) in curve.grids[0].iter().zip(&curve.effects).step_by(5) {
        println!("covid {g:>7.3}  effect {e:>7.3}");
    }
    println!(
        "slope below zero {:.3}, above zero {:.3}",
        curve.slope_between(-1.5, 0.0).unwrap_or(f64::NAN),
        curve.slope_between(0.0, 1.5).unwrap_or(f64::NAN)
    );
    curve.write_csv(out.join("pdp_covid.csv"))?;

    let g1 = default_grid(&d, "vix", 21)?;
    let g2 = default_grid(&d, "ust2y", 21)?;
    partial_effect_2d(&m, &d, "vix", "ust2y", &g1, &g2)?
        .write_csv(out.join("pdp_vix_ust2y.csv"))?;
    println!("wrote partial-effect CSVs to {}", out.display());
    Ok(())
}
