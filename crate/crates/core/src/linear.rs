//! Least-squares baselines: OLS on all features and an AR(1) on the momentum feature.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataio::{Dataset, MOMENTUM_FEATURE};
use crate::error::{Error, Result};

/// A column whose residual norm after projecting out earlier columns falls below
/// this fraction of its own norm is treated as linearly dependent.
const RANK_RTOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub feature_names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub rmse_in_sample: f64,
}

impl LinearModel {
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        self.intercept
            + self
                .coefficients
                .iter()
                .zip(x)
                .map(|(b, v)| b * v)
                .sum::<f64>()
    }

    /// Predictions on `d`, matching columns by name.
    pub fn predict_dataset(&self, d: &Dataset) -> Result<Vec<f64>> {
        let idx = self
            .feature_names
            .iter()
            .map(|n| {
                d.feature_index(n)
                    .ok_or_else(|| Error::Contract(format!("dataset lacks model feature `{n}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(d.rows()
            .map(|row| {
                self.intercept
                    + self
                        .coefficients
                        .iter()
                        .zip(&idx)
                        .map(|(b, &j)| b * row[j])
                        .sum::<f64>()
            })
            .collect())
    }

    /// Flat `{feature: coefficient, intercept, rmse}` map.
    pub fn coefficient_report(&self) -> BTreeMap<String, f64> {
        let mut out: BTreeMap<String, f64> = self
            .feature_names
            .iter()
            .cloned()
            .zip(self.coefficients.iter().copied())
            .collect();
        out.insert("intercept".into(), self.intercept);
        out.insert("rmse".into(), self.rmse_in_sample);
        out
    }
}

/// Householder QR least squares with an intercept column first.
///
/// Returns the coefficient vector `[intercept, b_1, ..., b_d]`.
fn least_squares(columns: Vec<Vec<f64>>, names: &[String], y: &[f64]) -> Result<Vec<f64>> {
    let m = y.len();
    let mut cols = columns;
    let p = cols.len();
    let mut rhs = y.to_vec();
    let mut dependent = Vec::new();

    if m < p {
        return Err(Error::Config(format!(
            "{m} rows cannot identify {p} coefficients"
        )));
    }
    // `k` is the next pivot row; dependent columns are skipped so every column is checked
    let mut k = 0;
    for j in 0..p {
        let original_norm = cols[j].iter().map(|v| v * v).sum::<f64>().sqrt();
        let norm = cols[j][k..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if original_norm == 0.0 || norm <= RANK_RTOL * original_norm {
            dependent.push(names[j].clone());
            continue;
        }
        let alpha = if cols[j][k] > 0.0 { -norm } else { norm };
        let mut v = cols[j][k..].to_vec();
        v[0] -= alpha;
        let vv: f64 = v.iter().map(|x| x * x).sum();
        let reflect = |c: &mut [f64]| {
            let dot: f64 = v.iter().zip(c.iter()).map(|(a, b)| a * b).sum();
            let scale = 2.0 * dot / vv;
            for (ci, vi) in c.iter_mut().zip(&v) {
                *ci -= scale * vi;
            }
        };
        for col in cols.iter_mut().skip(j + 1) {
            reflect(&mut col[k..]);
        }
        reflect(&mut rhs[k..]);
        cols[j][k] = alpha;
        cols[j][k + 1..].iter_mut().for_each(|x| *x = 0.0);
        k += 1;
    }
    if !dependent.is_empty() {
        return Err(Error::Singular { columns: dependent });
    }

    let mut beta = vec![0.0; p];
    for i in (0..p).rev() {
        let tail: f64 = (i + 1..p).map(|k| cols[k][i] * beta[k]).sum();
        beta[i] = (rhs[i] - tail) / cols[i][i];
    }
    if beta.iter().any(|b| !b.is_finite()) {
        return Err(Error::Numerical(
            "least squares produced non-finite coefficients".into(),
        ));
    }
    Ok(beta)
}

/// OLS with intercept on every feature of `d`.
pub fn fit_ols(d: &Dataset) -> Result<LinearModel> {
    let k = d.n_features();
    if d.n_rows() <= k + 1 {
        return Err(Error::Config(format!(
            "OLS needs more than {} rows for {k} features, got {}",
            k + 1,
            d.n_rows()
        )));
    }
    let mut columns = Vec::with_capacity(k + 1);
    columns.push(vec![1.0; d.n_rows()]);
    columns.extend((0..k).map(|j| d.column(j)));
    let mut names = vec!["intercept".to_string()];
    names.extend(d.feature_names().iter().cloned());
    let beta = least_squares(columns, &names, d.y())?;

    let mut model = LinearModel {
        feature_names: d.feature_names().to_vec(),
        coefficients: beta[1..].to_vec(),
        intercept: beta[0],
        rmse_in_sample: 0.0,
    };
    model.rmse_in_sample = rmse(&model, d)?;
    Ok(model)
}

/// Regression of the target on an intercept and the `momentum` feature.
pub fn fit_ar1(d: &Dataset) -> Result<LinearModel> {
    if d.feature_index(MOMENTUM_FEATURE).is_none() {
        return Err(Error::Config(format!(
            "AR(1) baseline needs the `{MOMENTUM_FEATURE}` feature"
        )));
    }
    fit_ols(&d.select_features(&[MOMENTUM_FEATURE])?)
}

/// Root mean squared residual of `model` on `d`.
pub fn rmse(model: &LinearModel, d: &Dataset) -> Result<f64> {
    let fitted = model.predict_dataset(d)?;
    let sse: f64 = fitted
        .iter()
        .zip(d.y())
        .map(|(f, y)| (y - f) * (y - f))
        .sum();
    Ok((sse / d.n_rows() as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn ds(rows: &[Vec<f64>], y: Vec<f64>, names: &[&str]) -> Dataset {
        let d0 = NaiveDate::from_ymd_opt(2015, 6, 1).unwrap();
        Dataset::from_rows(
            (0..y.len())
                .map(|i| d0 + chrono::Days::new(i as u64))
                .collect(),
            names.iter().map(|s| s.to_string()).collect(),
            rows,
            y,
            "y",
        )
        .unwrap()
    }

    /// Normal equations via Gaussian elimination with partial pivoting.
    fn normal_equations(rows: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
        let p = rows[0].len() + 1;
        let mut a = vec![vec![0.0; p + 1]; p];
        for (r, t) in rows.iter().zip(y) {
            let z: Vec<f64> = std::iter::once(1.0).chain(r.iter().copied()).collect();
            for i in 0..p {
                for j in 0..p {
                    a[i][j] += z[i] * z[j];
                }
                a[i][p] += z[i] * t;
            }
        }
        for c in 0..p {
            let piv = (c..p)
                .max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))
                .unwrap();
            a.swap(c, piv);
            for r in 0..p {
                if r != c {
                    let f = a[r][c] / a[c][c];
                    let pivot = a[c].clone();
                    for (x, v) in a[r][c..].iter_mut().zip(&pivot[c..]) {
                        *x -= f * v;
                    }
                }
            }
        }
        (0..p).map(|i| a[i][p] / a[i][i]).collect()
    }

    #[test]
    fn exact_linear_data() {
        let rows: Vec<Vec<f64>> = (0..10)
            .map(|i| vec![i as f64, ((i * i) % 7) as f64])
            .collect();
        let y = rows.iter().map(|r| 2.0 * r[0] - r[1]).collect();
        let m = fit_ols(&ds(&rows, y, &["a", "b"])).unwrap();
        assert!((m.coefficients[0] - 2.0).abs() < 1e-10);
        assert!((m.coefficients[1] + 1.0).abs() < 1e-10);
        assert!(m.intercept.abs() < 1e-10);
        assert!(m.rmse_in_sample < 1e-10);
    }

    #[test]
    fn duplicated_column_is_singular() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, i as f64]).collect();
        let y = (0..10).map(|i| i as f64).collect();
        match fit_ols(&ds(&rows, y, &["a", "b"])) {
            Err(Error::Singular { columns }) => assert_eq!(columns, ["b"]),
            other => panic!("unexpected {other:?}"),
        }
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 3.0]).collect();
        let y = (0..10).map(|i| i as f64).collect();
        assert!(matches!(
            fit_ols(&ds(&rows, y, &["a", "c"])),
            Err(Error::Singular { .. })
        ));
    }

    #[test]
    fn five_rows_match_normal_equations() {
        let rows = vec![
            vec![1.0, 0.5],
            vec![2.0, -1.0],
            vec![3.5, 2.0],
            vec![-1.0, 0.0],
            vec![0.0, 1.5],
        ];
        let y = vec![1.2, 0.7, 4.1, -2.0, 0.9];
        let beta = normal_equations(&rows, &y);
        let m = fit_ols(&ds(&rows, y, &["a", "b"])).unwrap();
        assert!((m.intercept - beta[0]).abs() < 1e-10);
        assert!((m.coefficients[0] - beta[1]).abs() < 1e-10);
        assert!((m.coefficients[1] - beta[2]).abs() < 1e-10);
    }

    #[test]
    fn too_few_rows() {
        let rows = vec![vec![1.0], vec![2.0]];
        assert!(matches!(
            fit_ols(&ds(&rows, vec![1.0, 2.0], &["a"])),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn ar1_cases() {
        let m: Vec<f64> = (0..30).map(|i| ((i * 37) % 11) as f64 - 5.0).collect();
        let rows: Vec<Vec<f64>> = m.iter().map(|&v| vec![v, v * v]).collect();
        let d = ds(&rows, m.clone(), &["other", MOMENTUM_FEATURE]);
        // target equals momentum squared here; swap so persistence is exact
        let d = d
            .with_target(rows.iter().map(|r| r[1]).collect(), "y")
            .unwrap();
        let ar = fit_ar1(&d).unwrap();
        assert!((ar.coefficients[0] - 1.0).abs() < 1e-10);
        assert!(ar.intercept.abs() < 1e-10);
        assert!(ar.rmse_in_sample < 1e-10);

        let flat = d.with_target(vec![0.3; 30], "y").unwrap();
        let ar = fit_ar1(&flat).unwrap();
        assert!(ar.coefficients[0].abs() < 1e-12);
        assert!((ar.intercept - 0.3).abs() < 1e-12);
        assert!(ar.rmse_in_sample < 1e-12);

        let no_mom = ds(&rows, m, &["a", "b"]);
        assert!(matches!(fit_ar1(&no_mom), Err(Error::Config(_))));
    }

    #[test]
    fn ar1_slope_near_zero_for_white_noise() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let n = 2000;
        let mom: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        let rows: Vec<Vec<f64>> = mom.iter().map(|&v| vec![v]).collect();
        let d = ds(&rows, y.clone(), &[MOMENTUM_FEATURE]);
        let m = fit_ar1(&d).unwrap();
        // standard error of the slope: s / sqrt(sum (x - xbar)^2)
        let xbar = mom.iter().sum::<f64>() / n as f64;
        let sxx: f64 = mom.iter().map(|x| (x - xbar).powi(2)).sum();
        let s2 = m.rmse_in_sample.powi(2) * n as f64 / (n as f64 - 2.0);
        let se = (s2 / sxx).sqrt();
        assert!(
            m.coefficients[0].abs() < 3.0 * se,
            "slope {} se {se}",
            m.coefficients[0]
        );
    }

    #[test]
    fn rmse_matches_two_pass_and_uniform_residuals() {
        let rows: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..8)
            .map(|i| i as f64 + if i % 2 == 0 { 0.1 } else { -0.1 })
            .collect();
        let d = ds(&rows, y.clone(), &["a"]);
        let model = LinearModel {
            feature_names: vec!["a".into()],
            coefficients: vec![1.0],
            intercept: 0.0,
            rmse_in_sample: 0.0,
        };
        assert!((rmse(&model, &d).unwrap() - 0.1).abs() < 1e-12);
        let other = LinearModel {
            feature_names: vec!["zz".into()],
            ..model
        };
        assert!(matches!(rmse(&other, &d), Err(Error::Contract(_))));
    }

    fn random_rows(seed: u64, n: usize, d: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect())
            .collect();
        let y = rows
            .iter()
            .map(|r| r.iter().sum::<f64>().sin() + rng.random::<f64>())
            .collect();
        (rows, y)
    }

    proptest! {
        #[test]
        fn residuals_orthogonal_and_row_order_invariant(seed in 0u64..1000, n in 8usize..60) {
            let (rows, y) = random_rows(seed, n, 3);
            let d = ds(&rows, y.clone(), &["a", "b", "c"]);
            let m = fit_ols(&d).unwrap();
            let fitted = m.predict_dataset(&d).unwrap();
            let resid: Vec<f64> = y.iter().zip(&fitted).map(|(a, b)| a - b).collect();
            let scale = y.iter().fold(1.0f64, |s, v| s.max(v.abs())) * 2.0;
            prop_assert!(resid.iter().sum::<f64>().abs() < 1e-8 * n as f64 * scale);
            for j in 0..3 {
                let dot: f64 = rows.iter().zip(&resid).map(|(r, e)| r[j] * e).sum();
                prop_assert!(dot.abs() < 1e-8 * n as f64 * scale);
            }
            let order: Vec<usize> = (0..n).rev().collect();
            let m2 = fit_ols(&d.select_rows(&order).unwrap()).unwrap();
            for (a, b) in m.coefficients.iter().zip(&m2.coefficients) {
                prop_assert!((a - b).abs() < 1e-9 * a.abs().max(1.0));
            }
        }

        #[test]
        fn nested_models_never_fit_worse(seed in 0u64..1000) {
            let (rows, y) = random_rows(seed, 40, 4);
            let d = ds(&rows, y, &["a", "b", "c", MOMENTUM_FEATURE]);
            let mut previous = f64::INFINITY;
            for k in 1..=4 {
                let names = ["a", "b", "c", MOMENTUM_FEATURE];
                let sub = d.select_features(&names[4 - k..]).unwrap();
                let r = fit_ols(&sub).unwrap().rmse_in_sample;
                prop_assert!(r <= previous * (1.0 + 1e-12));
                previous = r;
            }
            let ar = fit_ar1(&d).unwrap().rmse_in_sample;
            prop_assert!(fit_ols(&d).unwrap().rmse_in_sample <= ar * (1.0 + 1e-12));
        }
    }
}
