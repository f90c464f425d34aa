//! Generates the default synthetic benchmark and prints its summary statistics.
//!
//! ```text
//! cargo run --release --example synth_benchmark -- [out.csv]
//! ```

use oilforest::dataio::summarize;
use oilforest::linear::{fit_ols, rmse};
use oilforest::synthgen::{generate, DgpConfig};

fn main() -> oilforest::Result<()> {
    let cfg = DgpConfig::default();
    let synth = generate(&cfg)?;
    let d = &synth.dataset;
    println!(
        "{} rows x {} features, target `{}`",
        d.n_rows(),
        d.n_features(),
        d.target_name()
    );
    print!("{}", summarize(d)?.render());

    let ols = fit_ols(d)?;
    println!(
        "OLS in-sample RMSE {:.4} (noise std {})",
        rmse(&ols, d)?,
        cfg.noise_std
    );

    if let Some(path) = std::env::args().nth(1) {
        d.write_csv(&path)?;
        println!("wrote {path}");
    }
    Ok(())
}
