//! Properties of importance, partial effects and subsample studies on fitted forests.

mod support;

use oilforest::analysis::{
    importance, linspace, partial_effect_1d, partial_effect_2d, subsample_study, DateRange,
};
use oilforest::dataio::Dataset;
use oilforest::forest::{fit_forest, ForestConfig, ForestModel};
use oilforest::synthgen::{generate, DgpConfig, RegimeTerm};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn small_forest(seed: u64, n: usize, d: usize, trees: usize, p: usize) -> (Dataset, ForestModel) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = support::random_instance(&mut rng, n, d);
    let cfg = ForestConfig {
        n_trees: trees,
        min_split_size: p,
        seed,
        ..ForestConfig::default()
    };
    let m = fit_forest(&data, &cfg).unwrap();
    (data, m)
}

fn range_of(d: &Dataset, j: usize) -> (f64, f64) {
    let col = d.column(j);
    (
        col.iter().copied().fold(f64::INFINITY, f64::min),
        col.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn importance_is_a_distribution(seed in 0u64..10_000, n in 12usize..60, d in 1usize..5, p in 2usize..8) {
        let (_, m) = small_forest(seed, n, d, 8, p);
        let r = importance(&m);
        prop_assert!(r.normalized.iter().all(|&v| v >= 0.0));
        if r.degenerate {
            prop_assert!(r.raw.iter().all(|&v| v == 0.0));
        } else {
            prop_assert!((r.normalized.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn curves_only_move_at_split_thresholds(seed in 0u64..10_000, n in 12usize..50, d in 1usize..4) {
        let (data, m) = small_forest(seed, n, d, 5, 3);
        for j in 0..d {
            let mut thresholds: Vec<f64> = m.trees.iter().flat_map(|t| t.thresholds(j)).collect();
            thresholds.sort_by(f64::total_cmp);
            let (lo, hi) = range_of(&data, j);
            if lo == hi {
                continue;
            }
            let grid = linspace(lo, hi, 301);
            let pd = partial_effect_1d(&m, &data, &data.feature_names()[j], &grid).unwrap();
            for k in 1..grid.len() {
                if pd.effects[k] != pd.effects[k - 1] {
                    let (a, b) = (grid[k - 1], grid[k]);
                    prop_assert!(
                        thresholds.iter().any(|&t| a <= t && t < b),
                        "curve moved between {} and {} with no threshold there", a, b
                    );
                }
            }
            if thresholds.is_empty() {
                prop_assert!(pd.effects.iter().all(|&e| e == pd.effects[0]));
            }
        }
    }

    #[test]
    fn zero_importance_means_a_flat_curve(seed in 0u64..10_000, n in 12usize..40) {
        // shallow forests of two trees leave some of the four features unused
        let (data, m) = small_forest(seed, n, 4, 2, 12);
        let r = importance(&m);
        for j in (0..4).filter(|&j| r.raw[j] == 0.0) {
            let (lo, hi) = range_of(&data, j);
            let pd = partial_effect_1d(&m, &data, &data.feature_names()[j], &linspace(lo, hi, 25)).unwrap();
            prop_assert!(pd.effects.iter().all(|&e| e == pd.effects[0]));
        }
    }
}

#[test]
fn surface_at_the_mean_matches_the_curve() {
    let (data, m) = small_forest(11, 60, 3, 10, 4);
    let (lo, hi) = range_of(&data, 0);
    let g1 = linspace(lo, hi, 15);
    let mean1 = data.feature_means()[1];
    let curve = partial_effect_1d(&m, &data, "x0", &g1).unwrap();
    let surface = partial_effect_2d(&m, &data, "x0", "x1", &g1, &[mean1]).unwrap();
    assert_eq!(curve.effects, surface.effects);
}

#[test]
fn ignored_features_give_a_constant_surface() {
    let rows: Vec<Vec<f64>> = (0..40)
        .map(|i| vec![(i % 2) as f64, (i % 3) as f64, (i % 5) as f64])
        .collect();
    let y = rows.iter().map(|r| 3.0 * r[0]).collect();
    let data = support::dataset(&rows, y);
    let cfg = ForestConfig {
        n_trees: 5,
        mtry: Some(3),
        seed: 2,
        ..ForestConfig::default()
    };
    let m = fit_forest(&data, &cfg).unwrap();
    let r = importance(&m);
    assert_eq!((r.raw[1], r.raw[2]), (0.0, 0.0));
    let s = partial_effect_2d(
        &m,
        &data,
        "x1",
        "x2",
        &linspace(0.0, 2.0, 5),
        &linspace(0.0, 4.0, 9),
    )
    .unwrap();
    assert!(s.effects.iter().all(|&e| e == s.effects[0]));
}

#[test]
fn single_full_range_equals_the_full_fit() {
    let (data, _) = small_forest(5, 80, 3, 1, 2);
    let cfg = ForestConfig {
        n_trees: 20,
        seed: 9,
        ..ForestConfig::default()
    };
    let full = DateRange {
        name: "all".into(),
        from: data.dates()[0],
        to: *data.dates().last().unwrap(),
    };
    let study = subsample_study(&data, &[full], &cfg).unwrap();
    assert_eq!(
        study[0].1.as_ref().unwrap(),
        &importance(&fit_forest(&data, &cfg).unwrap())
    );
}

#[test]
fn regime_feature_matters_more_in_its_own_regime() {
    let mut linear = vec![0.5, 0.0, 0.3, 0.2];
    linear[1] = 0.0;
    let cfg = DgpConfig {
        n_rows: 1200,
        feature_names: ["a", "k", "b", "c"].map(String::from).to_vec(),
        linear,
        hinge: None,
        interaction: None,
        regime: Some(RegimeTerm {
            feature: 1,
            start_row: 600,
            coef: 1.5,
        }),
        noise_std: 0.3,
        ..DgpConfig::default()
    };
    let d = generate(&cfg).unwrap().dataset;
    let ranges = [
        DateRange {
            name: "before".into(),
            from: d.dates()[0],
            to: d.dates()[599],
        },
        DateRange {
            name: "after".into(),
            from: d.dates()[600],
            to: d.dates()[1199],
        },
        DateRange {
            name: "empty".into(),
            from: chrono::NaiveDate::from_ymd_opt(1990, 1, 1).unwrap(),
            to: chrono::NaiveDate::from_ymd_opt(1990, 2, 1).unwrap(),
        },
    ];
    let forest = ForestConfig {
        n_trees: 100,
        seed: 3,
        ..ForestConfig::default()
    };
    let study = subsample_study(&d, &ranges, &forest).unwrap();
    let before = study[0].1.as_ref().unwrap().get("k").unwrap();
    let after = study[1].1.as_ref().unwrap().get("k").unwrap();
    assert!(
        after > 0.4 && before < 0.1,
        "before {before}, after {after}"
    );
    assert!(study[2].1.is_none());
}
