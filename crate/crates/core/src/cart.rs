//! Single CART regression tree: exhaustive split search with a minimum
//! splitting-node size and random per-split feature subsets.

use std::fmt::Write as _;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataio::Dataset;
use crate::error::{Error, Result};

/// A split must remove more than this fraction of the node SSE to be taken.
const MIN_GAIN_RTOL: f64 = 1e-12;
/// Candidates within this fraction of node SSE of the incumbent count as ties.
const TIE_RTOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeConfig {
    /// Nodes with fewer rows than this are not split.
    pub min_split_size: usize,
    /// Features drawn (without replacement) as split candidates at each node.
    pub mtry: usize,
    pub rng_seed: u64,
}

impl TreeConfig {
    pub fn validate(&self, n_features: usize) -> Result<()> {
        if self.min_split_size < 2 {
            return Err(Error::Config(format!(
                "min_split_size must be at least 2, got {}",
                self.min_split_size
            )));
        }
        if self.mtry == 0 || self.mtry > n_features {
            return Err(Error::Config(format!(
                "mtry must lie in 1..={n_features}, got {}",
                self.mtry
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitCandidate {
    pub feature: usize,
    pub threshold: f64,
    pub sse_after: f64,
    pub sse_reduction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        count: usize,
        sse: f64,
    },
    Leaf {
        prediction: f64,
        count: usize,
        sse: f64,
    },
}

impl Node {
    pub fn count(&self) -> usize {
        match *self {
            Node::Split { count, .. } | Node::Leaf { count, .. } => count,
        }
    }

    pub fn sse(&self) -> f64 {
        match *self {
            Node::Split { sse, .. } | Node::Leaf { sse, .. } => sse,
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, Node::Leaf { .. })
    }
}

/// A fitted tree. Nodes are stored in pre-order; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    nodes: Vec<Node>,
    n_features: usize,
    /// Summed SSE reduction of the splits on each feature.
    sse_reduction: Vec<f64>,
}

impl RegressionTree {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn root(&self) -> &Node {
        &self.nodes[0]
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn sse_reduction(&self) -> &[f64] {
        &self.sse_reduction
    }

    pub fn leaves(&self) -> impl Iterator<Item = &Node> {
        self.nodes.iter().filter(|n| n.is_leaf())
    }

    pub fn n_leaves(&self) -> usize {
        self.leaves().count()
    }

    /// Summed leaf SSE, i.e. the in-sample SSE of the tree on its training rows.
    pub fn leaf_sse(&self) -> f64 {
        self.leaves().map(Node::sse).sum()
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, left).max(go(nodes, right)),
            }
        }
        go(&self.nodes, 0)
    }

    /// Routes `x` down the tree (`x[feature] <= threshold` goes left).
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_features {
            return Err(Error::Contract(format!(
                "tree expects {} features, got {}",
                self.n_features,
                x.len()
            )));
        }
        Ok(self.predict_row(x))
    }

    #[inline]
    pub(crate) fn predict_row(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { prediction, .. } => return prediction,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => i = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    /// Thresholds of every split on `feature`, ascending and deduplicated.
    pub fn thresholds(&self, feature: usize) -> Vec<f64> {
        let mut t: Vec<f64> = self
            .nodes
            .iter()
            .filter_map(|n| match *n {
                Node::Split {
                    feature: f,
                    threshold,
                    ..
                } if f == feature => Some(threshold),
                _ => None,
            })
            .collect();
        t.sort_by(f64::total_cmp);
        t.dedup();
        t
    }

    /// Indented text listing of every node, children below their parent.
    pub fn dump(&self, feature_names: Option<&[String]>) -> String {
        let mut out = String::new();
        self.dump_node(0, 0, feature_names, &mut out);
        out
    }

    fn dump_node(&self, i: usize, depth: usize, names: Option<&[String]>, out: &mut String) {
        let indent = "  ".repeat(depth);
        match self.nodes[i] {
            Node::Leaf {
                prediction,
                count,
                sse,
            } => {
                let _ = writeln!(out, "{indent}leaf predict={prediction} n={count} sse={sse}");
            }
            Node::Split {
                feature,
                threshold,
                left,
                right,
                count,
                sse,
            } => {
                let label = names
                    .and_then(|n| n.get(feature))
                    .cloned()
                    .unwrap_or_else(|| format!("x{feature}"));
                let _ = writeln!(out, "{indent}{label} <= {threshold} n={count} sse={sse}");
                self.dump_node(left, depth + 1, names, out);
                self.dump_node(right, depth + 1, names, out);
            }
        }
    }
}

/// Text rendering of a tree; see [`RegressionTree::dump`].
pub fn dump_tree(tree: &RegressionTree, feature_names: Option<&[String]>) -> String {
    tree.dump(feature_names)
}

/// Routes `x` through `tree`.
pub fn predict_tree(tree: &RegressionTree, x: &[f64]) -> Result<f64> {
    tree.predict(x)
}

/// Mean and SSE of the targets of `rows`, two-pass.
fn node_stats(y: &[f64], rows: &[usize]) -> (f64, f64) {
    let n = rows.len() as f64;
    let mean = rows.iter().map(|&r| y[r]).sum::<f64>() / n;
    let sse = rows
        .iter()
        .map(|&r| {
            let e = y[r] - mean;
            e * e
        })
        .sum();
    (mean, sse)
}

/// Midpoint of two consecutive distinct values, kept strictly above `lo`.
#[inline]
fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) * 0.5;
    if mid < hi {
        mid
    } else {
        // adjacent floats: `lo` itself separates them under the <= rule
        lo
    }
}

/// Reusable buffers for split search.
#[derive(Default)]
struct Scratch {
    pairs: Vec<(f64, f64)>,
    partition: Vec<usize>,
}

fn search(
    data: &Dataset,
    rows: &[usize],
    features: &[usize],
    mean: f64,
    parent_sse: f64,
    scratch: &mut Scratch,
) -> Option<SplitCandidate> {
    let n = rows.len();
    if n < 2 || parent_sse <= 0.0 {
        return None;
    }
    let y = data.y();
    let min_gain = MIN_GAIN_RTOL * parent_sse;
    let tie = TIE_RTOL * parent_sse;
    let n_f = n as f64;
    let mut best: Option<SplitCandidate> = None;

    for &feature in features {
        let pairs = &mut scratch.pairs;
        pairs.clear();
        pairs.extend(rows.iter().map(|&r| (data.value(r, feature), y[r] - mean)));
        pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        if pairs[0].0 == pairs[n - 1].0 {
            continue;
        }
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        let base = total * total / n_f;
        let mut left_sum = 0.0;
        for i in 0..n - 1 {
            left_sum += pairs[i].1;
            if pairs[i].0 == pairs[i + 1].0 {
                continue;
            }
            let n_left = (i + 1) as f64;
            let right_sum = total - left_sum;
            let reduction =
                left_sum * left_sum / n_left + right_sum * right_sum / (n_f - n_left) - base;
            if reduction <= min_gain {
                continue;
            }
            if best.is_none_or(|b| reduction > b.sse_reduction + tie) {
                best = Some(SplitCandidate {
                    feature,
                    threshold: midpoint(pairs[i].0, pairs[i + 1].0),
                    sse_after: (parent_sse - reduction).max(0.0),
                    sse_reduction: reduction,
                });
            }
        }
    }
    best
}

/// Best SSE-reducing binary split of `rows` over `allowed_features`.
///
/// Thresholds are midpoints between consecutive distinct values. Ties go to the
/// lowest feature index, then the lowest threshold. Returns `None` when no
/// candidate strictly lowers the SSE.
pub fn best_split(
    data: &Dataset,
    rows: &[usize],
    allowed_features: &[usize],
) -> Result<Option<SplitCandidate>> {
    if rows.is_empty() {
        return Err(Error::Contract("best_split called with no rows".into()));
    }
    if let Some(&f) = allowed_features.iter().find(|&&f| f >= data.n_features()) {
        return Err(Error::Contract(format!("feature index {f} out of range")));
    }
    let mut features = allowed_features.to_vec();
    features.sort_unstable();
    features.dedup();
    let (mean, sse) = node_stats(data.y(), rows);
    Ok(search(
        data,
        rows,
        &features,
        mean,
        sse,
        &mut Scratch::default(),
    ))
}

struct Grower<'a, R> {
    data: &'a Dataset,
    cfg: &'a TreeConfig,
    rng: &'a mut R,
    nodes: Vec<Node>,
    sse_reduction: Vec<f64>,
    scratch: Scratch,
    all_features: Vec<usize>,
}

impl<R: Rng> Grower<'_, R> {
    fn candidate_features(&mut self) -> Vec<usize> {
        let d = self.all_features.len();
        if self.cfg.mtry >= d {
            return self.all_features.clone();
        }
        let mut picked = rand::seq::index::sample(self.rng, d, self.cfg.mtry).into_vec();
        picked.sort_unstable();
        picked
    }

    /// Grows the subtree over `rows` (reordered in place) and returns its node index.
    fn grow(&mut self, rows: &mut [usize]) -> usize {
        let (mean, sse) = node_stats(self.data.y(), rows);
        let count = rows.len();
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf {
            prediction: mean,
            count,
            sse,
        });
        if count < self.cfg.min_split_size || sse <= 0.0 {
            return id;
        }
        let features = self.candidate_features();
        let Some(split) = search(self.data, rows, &features, mean, sse, &mut self.scratch) else {
            return id;
        };

        // stable partition keeps each side in its original relative order
        let part = &mut self.scratch.partition;
        part.clear();
        part.extend(
            rows.iter()
                .copied()
                .filter(|&r| self.data.value(r, split.feature) <= split.threshold),
        );
        let n_left = part.len();
        part.extend(
            rows.iter()
                .copied()
                .filter(|&r| self.data.value(r, split.feature) > split.threshold),
        );
        rows.copy_from_slice(part);
        debug_assert!(n_left > 0 && n_left < count);

        let (left_rows, right_rows) = rows.split_at_mut(n_left);
        let left = self.grow(left_rows);
        let right = self.grow(right_rows);
        let gain = sse - self.nodes[left].sse() - self.nodes[right].sse();
        self.sse_reduction[split.feature] += gain.max(0.0);
        self.nodes[id] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
            count,
            sse,
        };
        id
    }
}

/// Grows a tree on `rows` of `data`.
///
/// A node with at least `min_split_size` rows is split on the best candidate among
/// `mtry` features drawn from `rng`; otherwise, or when no split lowers its SSE, it
/// becomes a leaf predicting the mean target of its rows. Deterministic given the
/// inputs and the rng state.
pub fn grow_tree<R: Rng>(
    data: &Dataset,
    rows: &[usize],
    cfg: &TreeConfig,
    rng: &mut R,
) -> Result<RegressionTree> {
    if rows.is_empty() {
        return Err(Error::Contract("grow_tree called with no rows".into()));
    }
    cfg.validate(data.n_features())?;
    if let Some(&r) = rows.iter().find(|&&r| r >= data.n_rows()) {
        return Err(Error::Contract(format!("row index {r} out of range")));
    }
    let mut grower = Grower {
        data,
        cfg,
        rng,
        nodes: Vec::new(),
        sse_reduction: vec![0.0; data.n_features()],
        scratch: Scratch::default(),
        all_features: (0..data.n_features()).collect(),
    };
    let mut work = rows.to_vec();
    grower.grow(&mut work);
    Ok(RegressionTree {
        nodes: grower.nodes,
        n_features: data.n_features(),
        sse_reduction: grower.sse_reduction,
    })
}

/// Grows a tree on all rows with an rng seeded from `cfg.rng_seed`.
pub fn grow_tree_seeded(data: &Dataset, cfg: &TreeConfig) -> Result<RegressionTree> {
    let rows: Vec<usize> = (0..data.n_rows()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    grow_tree(data, &rows, cfg, &mut rng)
}
