//! Grows one regression tree on a handful of rows and prints it.

use chrono::NaiveDate;
use oilforest::cart::{grow_tree_seeded, TreeConfig};
use oilforest::dataio::Dataset;

fn main() -> oilforest::Result<()> {
    let day = NaiveDate::from_ymd_opt(2021, 3, 1).expect("valid date");
    let rows: Vec<Vec<f64>> = (0..12)
        .map(|i| vec![i as f64, ((i * 5) % 7) as f64])
        .collect();
    let y: Vec<f64> = rows
        .iter()
        .map(|r| if r[0] < 6.0 { 1.0 } else { 4.0 } + 0.5 * r[1])
        .collect();
    let dates = (0..12).map(|i| day + chrono::Days::new(i)).collect();
    let d = Dataset::from_rows(dates, vec!["vix".into(), "ust2y".into()], &rows, y, "brent")?;

    let cfg = TreeConfig {
        min_split_size: 4,
        mtry: 2,
        rng_seed: 0,
    };
    let tree = grow_tree_seeded(&d, &cfg)?;
    print!("{}", tree.dump(Some(d.feature_names())));
    println!("depth {}, {} leaves", tree.depth(), tree.n_leaves());
    Ok(())
}
