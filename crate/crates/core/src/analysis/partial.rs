use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataio::Dataset;
use crate::error::{Error, Result};
use crate::forest::ForestModel;
use crate::report::write_csv;

pub const DEFAULT_GRID_POINTS: usize = 41;

/// Forest predictions along one or two features, the rest held at their means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartialEffectGrid {
    pub features: Vec<String>,
    pub grids: Vec<Vec<f64>>,
    /// 1D: one value per grid point. 2D: row-major, `effects[i * grids[1].len() + j]`.
    pub effects: Vec<f64>,
    /// Feature means used for the held-fixed covariates.
    pub baseline: Vec<f64>,
}

impl PartialEffectGrid {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        let width = self.grids.get(1).map_or(1, Vec::len);
        self.effects[i * width + j]
    }

    /// `grid,effect` for 1D; long-form `g1,g2,effect` for 2D.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        if self.grids.len() == 1 {
            write_csv(
                path,
                &["grid", "effect"],
                self.grids[0]
                    .iter()
                    .zip(&self.effects)
                    .map(|(g, e)| vec![g.to_string(), e.to_string()]),
            )
        } else {
            let (g1, g2) = (&self.grids[0], &self.grids[1]);
            write_csv(
                path,
                &["g1", "g2", "effect"],
                g1.iter().enumerate().flat_map(|(i, a)| {
                    g2.iter().enumerate().map(move |(j, b)| {
                        vec![a.to_string(), b.to_string(), self.at(i, j).to_string()]
                    })
                }),
            )
        }
    }

    /// Least-squares slope of the 1D curve over the grid points in `lo..=hi`.
    pub fn slope_between(&self, lo: f64, hi: f64) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self.grids[0]
            .iter()
            .zip(&self.effects)
            .filter(|(g, _)| **g >= lo && **g <= hi)
            .map(|(g, e)| (*g, *e))
            .collect();
        least_squares_slope(&pts)
    }
}

pub fn least_squares_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// `points` equally spaced values spanning the observed range of `feature`.
pub fn default_grid(d: &Dataset, feature: &str, points: usize) -> Result<Vec<f64>> {
    let j = feature_index(d, feature)?;
    let col = d.column(j);
    let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(linspace(lo, hi, points))
}

pub fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    if points <= 1 || lo == hi {
        return vec![lo];
    }
    let step = (hi - lo) / (points - 1) as f64;
    (0..points)
        .map(|i| {
            if i == points - 1 {
                hi
            } else {
                lo + step * i as f64
            }
        })
        .collect()
}

fn feature_index(d: &Dataset, feature: &str) -> Result<usize> {
    d.feature_index(feature)
        .ok_or_else(|| Error::Contract(format!("unknown feature `{feature}`")))
}

fn check_grid(d: &Dataset, j: usize, grid: &[f64]) -> Result<()> {
    let name = &d.feature_names()[j];
    if grid.is_empty() || grid.iter().any(|g| !g.is_finite()) {
        return Err(Error::Contract(format!(
            "grid for `{name}` must be non-empty and finite"
        )));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Contract(format!(
            "grid for `{name}` must be strictly increasing"
        )));
    }
    let col = d.column(j);
    let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let pad = 0.1 * (hi - lo);
    if grid[0] < lo - pad || grid[grid.len() - 1] > hi + pad {
        return Err(Error::Contract(format!(
            "grid for `{name}` leaves the observed range [{lo}, {hi}] extended by 10%"
        )));
    }
    Ok(())
}

fn check_model(m: &ForestModel, d: &Dataset) -> Result<()> {
    if m.feature_names != d.feature_names() {
        return Err(Error::Contract(
            "dataset columns do not match the model".into(),
        ));
    }
    Ok(())
}

pub fn partial_effect_1d(
    m: &ForestModel,
    d: &Dataset,
    feature: &str,
    grid: &[f64],
) -> Result<PartialEffectGrid> {
    check_model(m, d)?;
    let j = feature_index(d, feature)?;
    check_grid(d, j, grid)?;
    let baseline = d.feature_means();
    let effects = grid
        .par_iter()
        .map(|&g| {
            let mut x = baseline.clone();
            x[j] = g;
            m.predict_row(&x)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PartialEffectGrid {
        features: vec![feature.to_string()],
        grids: vec![grid.to_vec()],
        effects,
        baseline,
    })
}

pub fn partial_effect_2d(
    m: &ForestModel,
    d: &Dataset,
    f1: &str,
    f2: &str,
    grid1: &[f64],
    grid2: &[f64],
) -> Result<PartialEffectGrid> {
    check_model(m, d)?;
    if f1 == f2 {
        return Err(Error::Contract(format!(
            "2D partial effect needs two features, got `{f1}` twice"
        )));
    }
    let (j1, j2) = (feature_index(d, f1)?, feature_index(d, f2)?);
    check_grid(d, j1, grid1)?;
    check_grid(d, j2, grid2)?;
    let baseline = d.feature_means();
    let cells: Vec<(f64, f64)> = grid1
        .iter()
        .flat_map(|&a| grid2.iter().map(move |&b| (a, b)))
        .collect();
    let effects = cells
        .par_iter()
        .map(|&(a, b)| {
            let mut x = baseline.clone();
            x[j1] = a;
            x[j2] = b;
            m.predict_row(&x)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PartialEffectGrid {
        features: vec![f1.to_string(), f2.to_string()],
        grids: vec![grid1.to_vec(), grid2.to_vec()],
        effects,
        baseline,
    })
}
