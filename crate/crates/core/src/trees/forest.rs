use rand::seq::{index, SliceRandom};
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cart::{fit_cart_on, RegressionTree, TreeParams};
use crate::data::QualityDataset;
use crate::error::{Error, Result};
use crate::seed;

pub const FOREST_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleKind {
    /// Feature subsampling at every node.
    RandomForest,
    /// Feature subsampling once per tree.
    Bagging,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleParams {
    pub kind: EnsembleKind,
    pub n_trees: usize,
    /// `max_features`.
    pub feature_fraction: f64,
    /// `max_samples`: each tree trains on `round(sample_fraction * N)` rows.
    pub sample_fraction: f64,
    /// Draw rows with replacement.
    pub bootstrap: bool,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub seed: u64,
}

impl EnsembleParams {
    pub fn random_forest() -> Self {
        EnsembleParams {
            kind: EnsembleKind::RandomForest,
            n_trees: 166,
            feature_fraction: 0.4,
            sample_fraction: 0.8,
            bootstrap: false,
            max_depth: None,
            min_samples_split: 2,
            seed: 0,
        }
    }

    pub fn bagging() -> Self {
        EnsembleParams {
            kind: EnsembleKind::Bagging,
            n_trees: 166,
            feature_fraction: 1.0,
            sample_fraction: 0.4,
            bootstrap: true,
            max_depth: None,
            min_samples_split: 2,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::InvalidParam("n_trees must be positive".into()));
        }
        if !(self.sample_fraction > 0.0 && self.sample_fraction <= 1.0) {
            return Err(Error::InvalidParam("sample_fraction must lie in (0, 1]".into()));
        }
        if !(self.feature_fraction > 0.0 && self.feature_fraction <= 1.0) {
            return Err(Error::InvalidParam("feature_fraction must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub format_version: u32,
    pub params: EnsembleParams,
    pub feature_count: usize,
    pub feature_names: Vec<String>,
    pub trees: Vec<RegressionTree>,
    importances: Vec<f64>,
}

impl ForestModel {
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.feature_count {
            return Err(Error::LengthMismatch {
                left: x.len(),
                right: self.feature_count,
            });
        }
        let sum: f64 = self.trees.iter().map(|t| t.predict_unchecked(x)).sum();
        Ok(sum / self.trees.len() as f64)
    }

    /// Total squared-error reduction per feature over all trees, normalized
    /// to sum 1; all zeros when no tree ever split.
    pub fn feature_importance(&self) -> &[f64] {
        &self.importances
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: ForestModel = serde_json::from_str(s)?;
        if m.format_version != FOREST_FORMAT_VERSION {
            return Err(Error::Version(m.format_version));
        }
        Ok(m)
    }
}

fn normalized(gains: &[f64]) -> Vec<f64> {
    let total: f64 = gains.iter().sum();
    if total > 0.0 {
        gains.iter().map(|g| g / total).collect()
    } else {
        vec![0.0; gains.len()]
    }
}

fn sample_rows(n: usize, params: &EnsembleParams, rng: &mut seed::Rng) -> Vec<usize> {
    let m = ((params.sample_fraction * n as f64).round() as usize).clamp(1, n);
    if params.bootstrap {
        (0..m).map(|_| rng.random_range(0..n)).collect()
    } else {
        let mut rows = index::sample(rng, n, m).into_vec();
        rows.sort_unstable();
        rows
    }
}

fn fit_tree(
    columns: &[Vec<f64>],
    y: &[f64],
    params: &EnsembleParams,
    tree_index: usize,
) -> Result<RegressionTree> {
    let f = columns.len();
    let mut rng = seed::derived_rng(params.seed, &[tree_index as u64]);
    let rows = sample_rows(y.len(), params, &mut rng);
    let (features, node_fraction) = match params.kind {
        EnsembleKind::RandomForest => ((0..f).collect::<Vec<_>>(), params.feature_fraction),
        EnsembleKind::Bagging => {
            let m = ((params.feature_fraction * f as f64).ceil() as usize).clamp(1, f);
            let mut all: Vec<usize> = (0..f).collect();
            if m < f {
                all.shuffle(&mut rng);
            }
            let mut chosen = all[..m].to_vec();
            chosen.sort_unstable();
            (chosen, 1.0)
        }
    };
    let tree_params = TreeParams {
        max_depth: params.max_depth,
        min_samples_split: params.min_samples_split,
        feature_fraction: node_fraction,
        seed: rng.random(),
    };
    fit_cart_on(columns, y, rows, &features, &tree_params)
}

/// Trains an ensemble. Trees are fitted in parallel from per-tree seeds,
/// so the result does not depend on the thread count.
pub fn fit_ensemble(ds: &QualityDataset, params: &EnsembleParams) -> Result<ForestModel> {
    params.validate()?;
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let columns = ds.columns();
    let y = ds.mos();
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|i| fit_tree(&columns, &y, params, i))
        .collect::<Result<Vec<_>>>()?;
    let mut gains = vec![0.0; ds.feature_count()];
    for t in &trees {
        for (g, tg) in gains.iter_mut().zip(&t.gains) {
            *g += tg;
        }
    }
    Ok(ForestModel {
        format_version: FOREST_FORMAT_VERSION,
        params: *params,
        feature_count: ds.feature_count(),
        feature_names: ds.column_names().to_vec(),
        trees,
        importances: normalized(&gains),
    })
}

pub fn fit_random_forest(ds: &QualityDataset, params: &EnsembleParams) -> Result<ForestModel> {
    fit_ensemble(ds, &EnsembleParams { kind: EnsembleKind::RandomForest, ..*params })
}

pub fn fit_bagging(ds: &QualityDataset, params: &EnsembleParams) -> Result<ForestModel> {
    fit_ensemble(ds, &EnsembleParams { kind: EnsembleKind::Bagging, ..*params })
}
