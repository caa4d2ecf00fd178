use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::QualityDataset;
use crate::error::{Error, Result};
use crate::seed;

/// Gains within `TIE_TOLERANCE * (1 + |best|)` of the best count as ties.
pub const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    /// `None` grows until leaves are pure or too small to split.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    /// Fraction of features examined at each node.
    pub feature_fraction: f64,
    pub seed: u64,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: None,
            min_samples_split: 2,
            feature_fraction: 1.0,
            seed: 0,
        }
    }
}

impl TreeParams {
    pub fn validate(&self) -> Result<()> {
        if self.min_samples_split < 2 {
            return Err(Error::InvalidParam("min_samples_split must be >= 2".into()));
        }
        if !(self.feature_fraction > 0.0 && self.feature_fraction <= 1.0) {
            return Err(Error::InvalidParam("feature_fraction must lie in (0, 1]".into()));
        }
        if self.max_depth == Some(0) {
            return Err(Error::InvalidParam("max_depth must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
        samples: usize,
    },
}

/// Flattened binary tree; node 0 is the root. Samples go left iff
/// `x[feature] <= threshold`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub nodes: Vec<Node>,
    pub feature_count: usize,
    /// Unnormalized total squared-error reduction per feature.
    pub gains: Vec<f64>,
}

impl RegressionTree {
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.feature_count {
            return Err(Error::LengthMismatch {
                left: x.len(),
                right: self.feature_count,
            });
        }
        Ok(self.predict_unchecked(x))
    }

    pub(crate) fn predict_unchecked(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { value, .. } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn root(&self) -> &Node {
        &self.nodes[0]
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }
}

#[derive(Debug, Clone, Copy)]
struct Split {
    feature: usize,
    threshold: f64,
    gain: f64,
}

fn improves(gain: f64, best: Option<&Split>) -> bool {
    match best {
        None => true,
        Some(b) => gain > b.gain + TIE_TOLERANCE * (1.0 + b.gain.abs()),
    }
}

fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    // adjacent floats: keep the split strictly between the two values
    if m >= b {
        a
    } else {
        m
    }
}

/// Best threshold for one feature, scanning thresholds in ascending order.
fn best_split_on(
    feature: usize,
    column: &[f64],
    y: &[f64],
    rows: &[usize],
    scratch: &mut Vec<(f64, f64)>,
    best: &mut Option<Split>,
) {
    scratch.clear();
    scratch.extend(rows.iter().map(|&r| (column[r], y[r])));
    scratch.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = scratch.len();
    let total: f64 = scratch.iter().map(|p| p.1).sum();
    let mut left_sum = 0.0;
    for i in 1..n {
        left_sum += scratch[i - 1].1;
        if scratch[i - 1].0 == scratch[i].0 {
            continue;
        }
        let (nl, nr) = (i as f64, (n - i) as f64);
        let diff = left_sum / nl - (total - left_sum) / nr;
        let gain = nl * nr / n as f64 * diff * diff;
        if improves(gain, best.as_ref()) {
            *best = Some(Split {
                feature,
                threshold: midpoint(scratch[i - 1].0, scratch[i].0),
                gain,
            });
        }
    }
}

struct Builder<'a> {
    columns: &'a [Vec<f64>],
    y: &'a [f64],
    features: &'a [usize],
    params: TreeParams,
    rng: seed::Rng,
    nodes: Vec<Node>,
    gains: Vec<f64>,
    scratch: Vec<(f64, f64)>,
}

impl Builder<'_> {
    fn leaf(&mut self, rows: &[usize]) -> usize {
        let value = rows.iter().map(|&r| self.y[r]).sum::<f64>() / rows.len() as f64;
        self.nodes.push(Node::Leaf {
            value,
            samples: rows.len(),
        });
        self.nodes.len() - 1
    }

    fn find_split(&mut self, rows: &[usize]) -> Option<Split> {
        let f = self.features.len();
        let mut order: Vec<usize> = self.features.to_vec();
        if self.params.feature_fraction < 1.0 {
            order.shuffle(&mut self.rng);
        }
        let first = ((self.params.feature_fraction * f as f64).ceil() as usize).clamp(1, f);
        let mut best = None;
        let mut chunk: Vec<usize> = order[..first].to_vec();
        chunk.sort_unstable();
        let mut next = first;
        loop {
            for &feat in &chunk {
                best_split_on(feat, &self.columns[feat], self.y, rows, &mut self.scratch, &mut best);
            }
            // all sampled features constant here: keep drawing until one splits
            if best.is_some() || next >= f {
                return best;
            }
            chunk = vec![order[next]];
            next += 1;
        }
    }

    fn grow(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let (lo, hi) = rows.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &r| {
            (lo.min(self.y[r]), hi.max(self.y[r]))
        });
        let stop = rows.len() < self.params.min_samples_split
            || self.params.max_depth.is_some_and(|d| depth >= d)
            || lo == hi;
        if stop {
            return self.leaf(&rows);
        }
        let Some(split) = self.find_split(&rows) else {
            return self.leaf(&rows);
        };
        self.gains[split.feature] += split.gain;
        let col = &self.columns[split.feature];
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
            rows.iter().partition(|&&r| col[r] <= split.threshold);
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { value: 0.0, samples: 0 });
        let left = self.grow(left_rows, depth + 1);
        let right = self.grow(right_rows, depth + 1);
        self.nodes[id] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        id
    }
}

/// Grows a tree on `rows` (repeats allowed) of column-major `columns`,
/// searching only `features`.
pub fn fit_cart_on(
    columns: &[Vec<f64>],
    y: &[f64],
    rows: Vec<usize>,
    features: &[usize],
    params: &TreeParams,
) -> Result<RegressionTree> {
    params.validate()?;
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if features.is_empty() {
        return Err(Error::InvalidParam("no features to split on".into()));
    }
    let mut b = Builder {
        columns,
        y,
        features,
        params: *params,
        rng: seed::rng(params.seed),
        nodes: Vec::new(),
        gains: vec![0.0; columns.len()],
        scratch: Vec::with_capacity(rows.len()),
    };
    b.grow(rows, 0);
    Ok(RegressionTree {
        nodes: b.nodes,
        feature_count: columns.len(),
        gains: b.gains,
    })
}

pub fn fit_cart(ds: &QualityDataset, params: &TreeParams) -> Result<RegressionTree> {
    let columns = ds.columns();
    let features: Vec<usize> = (0..ds.feature_count()).collect();
    fit_cart_on(&columns, &ds.mos(), (0..ds.len()).collect(), &features, params)
}
