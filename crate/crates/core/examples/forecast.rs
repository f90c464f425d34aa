//! Direct multi-horizon forecasts of a synthetic price: one forest per horizon.

use oilforest::analysis::{
    compare, make_forecast_dataset, EvalTable, ForecastSpec, TableLayout, STANDARD_HORIZONS,
};
use oilforest::dataio::DEFAULT_WINDOW;
use oilforest::forest::{fit_forest, ForestConfig};
use oilforest::linear::{fit_ar1, fit_ols};
use oilforest::synthgen::{generate_price_path, DgpConfig};

fn main() -> oilforest::Result<()> {
    let dgp = DgpConfig::default();
    let path = generate_price_path(&dgp, DEFAULT_WINDOW)?;
    let cfg = ForestConfig {
        n_trees: 200,
        seed: 11,
        ..ForestConfig::default()
    };

    let mut table = EvalTable::new(TableLayout::Forecast);
    for h in STANDARD_HORIZONS {
        let spec = ForecastSpec::new(h)?;
        let fd = make_forecast_dataset(&path.dataset, spec, &path.panel, dgp.target_name())?;
        let forest = fit_forest(&fd, &cfg)?;
        table.push(compare(
            &forest,
            &fit_ols(&fd)?,
            &fit_ar1(&fd)?,
            &fd,
            spec.label(),
        )?);
    }
    print!("{}", table.render());
    Ok(())
}
