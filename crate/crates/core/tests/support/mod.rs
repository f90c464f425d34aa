//! Shared helpers for the integration tests, including reference
//! implementations written independently of the library code.
#![allow(dead_code)]

use chrono::NaiveDate;
use oilforest::cart::{Node, RegressionTree};
use oilforest::dataio::Dataset;
use rand::Rng;

pub fn dates(n: usize) -> Vec<NaiveDate> {
    let d0 = NaiveDate::from_ymd_opt(2015, 1, 1).unwrap();
    (0..n).map(|i| d0 + chrono::Days::new(i as u64)).collect()
}

pub fn dataset(rows: &[Vec<f64>], y: Vec<f64>) -> Dataset {
    let d = rows.first().map_or(0, Vec::len);
    let names = (0..d).map(|j| format!("x{j}")).collect();
    Dataset::from_rows(dates(y.len()), names, rows, y, "y").unwrap()
}

/// Random regression instance. Features are drawn from a small integer lattice
/// half of the time so that duplicated values and exact ties are exercised.
pub fn random_instance<R: Rng>(rng: &mut R, n: usize, d: usize) -> Dataset {
    let lattice = rng.random_bool(0.5);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            (0..d)
                .map(|_| {
                    if lattice {
                        rng.random_range(0..6) as f64
                    } else {
                        rng.random_range(-10.0..10.0)
                    }
                })
                .collect()
        })
        .collect();
    let y = rows
        .iter()
        .map(|r| {
            let signal = if r[0] > 0.5 { 2.0 } else { -1.0 } + 0.3 * r[d - 1];
            signal + rng.random_range(-1.0..1.0)
        })
        .collect();
    dataset(&rows, y)
}

/// A node of the reference tree.
#[derive(Debug, Clone, PartialEq)]
pub enum OracleNode {
    Leaf(f64),
    Split {
        feature: usize,
        threshold: f64,
        left: Box<OracleNode>,
        right: Box<OracleNode>,
    },
}

impl OracleNode {
    pub fn predict(&self, x: &[f64]) -> f64 {
        match self {
            OracleNode::Leaf(v) => *v,
            OracleNode::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                if x[*feature] <= *threshold {
                    left.predict(x)
                } else {
                    right.predict(x)
                }
            }
        }
    }

    /// Pre-order `(feature, threshold)` of the splits, `None` for leaves.
    pub fn preorder(&self) -> Vec<Option<(usize, f64)>> {
        let mut out = Vec::new();
        fn go(n: &OracleNode, out: &mut Vec<Option<(usize, f64)>>) {
            match n {
                OracleNode::Leaf(_) => out.push(None),
                OracleNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    out.push(Some((*feature, *threshold)));
                    go(left, out);
                    go(right, out);
                }
            }
        }
        go(self, &mut out);
        out
    }
}

pub fn tree_preorder(t: &RegressionTree) -> Vec<Option<(usize, f64)>> {
    t.nodes()
        .iter()
        .map(|n| match *n {
            Node::Split {
                feature, threshold, ..
            } => Some((feature, threshold)),
            Node::Leaf { .. } => None,
        })
        .collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn sse(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum()
}

/// Exhaustive CART: every midpoint of every feature is tried by physically
/// partitioning the node and recomputing both child SSEs from scratch.
///
/// Selection rules: a split must lower the node SSE by more than `1e-12` of it;
/// a candidate replaces the incumbent only if it is better by more than `1e-10`
/// of the node SSE, so near-ties resolve to the lowest feature, then threshold.
pub fn oracle_tree(rows: &[Vec<f64>], y: &[f64], p: usize) -> OracleNode {
    let idx: Vec<usize> = (0..y.len()).collect();
    grow(rows, y, &idx, p)
}

fn grow(rows: &[Vec<f64>], y: &[f64], idx: &[usize], p: usize) -> OracleNode {
    let ys: Vec<f64> = idx.iter().map(|&i| y[i]).collect();
    let parent = sse(&ys);
    let leaf = OracleNode::Leaf(mean(&ys));
    if idx.len() < p || parent <= 0.0 {
        return leaf;
    }
    let columns: Vec<Vec<f64>> = (0..rows[0].len())
        .map(|j| rows.iter().map(|r| r[j]).collect())
        .collect();
    let mut best: Option<(usize, f64, f64)> = None;
    for (j, col) in columns.iter().enumerate() {
        let column = |i: usize| col[i];
        let mut values: Vec<f64> = idx.iter().map(|&i| column(i)).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for w in values.windows(2) {
            let mut t = w[0] + (w[1] - w[0]) / 2.0;
            if t >= w[1] {
                t = w[0];
            }
            let left: Vec<f64> = idx
                .iter()
                .filter(|&&i| column(i) <= t)
                .map(|&i| y[i])
                .collect();
            let right: Vec<f64> = idx
                .iter()
                .filter(|&&i| column(i) > t)
                .map(|&i| y[i])
                .collect();
            let gain = parent - sse(&left) - sse(&right);
            if gain <= 1e-12 * parent {
                continue;
            }
            if best.is_none_or(|(_, _, g)| gain > g + 1e-10 * parent) {
                best = Some((j, t, gain));
            }
        }
    }
    let Some((feature, threshold, _)) = best else {
        return leaf;
    };
    let (l, r): (Vec<usize>, Vec<usize>) =
        idx.iter().partition(|&&i| rows[i][feature] <= threshold);
    OracleNode::Split {
        feature,
        threshold,
        left: Box::new(grow(rows, y, &l, p)),
        right: Box::new(grow(rows, y, &r, p)),
    }
}

/// Population variance.
pub fn variance(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64
}
