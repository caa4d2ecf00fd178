use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::algo::AlgorithmConfig;
use super::cv::{run_cv, CvScheme, MetricPooling, MetricSummary};
use crate::data::{FeatureRanking, QualityDataset};
use crate::error::{Error, Result};
use crate::metrics::{fisher_z_compare, MetricOptions};
use crate::seed;
use crate::trees::{fit_random_forest, EnsembleParams};

/// Sample size the significance tests assume unless told otherwise.
pub const DEFAULT_SIGNIFICANCE_N: usize = 160;

/// Trains one forest per left-out row, averages their impurity importances
/// and returns the features ranked by that average.
pub fn rank_features_loo(ds: &QualityDataset, params: &EnsembleParams) -> Result<FeatureRanking> {
    let n = ds.len();
    if n < 2 {
        return Err(Error::OutOfRange {
            what: "sample count",
            value: n.to_string(),
            allowed: ">= 2".into(),
        });
    }
    params.validate()?;
    let loo_tag = seed::tag("loo-rank");
    let importances: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|left_out| {
            let keep: Vec<usize> = (0..n).filter(|&i| i != left_out).collect();
            let p = params.with_seed(seed::derive(params.seed, &[loo_tag, left_out as u64]));
            Ok(fit_random_forest(&ds.subset(&keep)?, &p)?.feature_importance().to_vec())
        })
        .collect::<Result<_>>()?;
    let f = ds.feature_count();
    let mean: Vec<f64> = (0..f)
        .map(|j| importances.iter().map(|v| v[j]).sum::<f64>() / n as f64)
        .collect();
    FeatureRanking::from_importances(ds.column_names(), &mean)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub k: usize,
    pub summary: MetricSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub algorithm: String,
    /// False when the data had no CI and no global margin was given, in
    /// which case RMSE* equals RMSE and carries no information.
    pub rmse_star_attempted: bool,
    pub rows: Vec<SweepRow>,
}

/// Cross-validates the model on the top-1, top-2, ..., top-`k_max` columns
/// of a dataset already ordered by importance.
pub fn feature_sweep(
    ds_ordered: &QualityDataset,
    config: &AlgorithmConfig,
    scheme: &CvScheme,
    k_max: usize,
    master_seed: u64,
    pooling: MetricPooling,
    metric_opts: &MetricOptions,
) -> Result<SweepResult> {
    if k_max == 0 || k_max > ds_ordered.feature_count() {
        return Err(Error::OutOfRange {
            what: "k_max",
            value: k_max.to_string(),
            allowed: format!("1..={}", ds_ordered.feature_count()),
        });
    }
    config.validate()?;
    scheme.validate()?;
    let algo = config.algorithm();
    let algo_tag = seed::tag(algo.id());
    let rows = (1..=k_max)
        .into_par_iter()
        .map(|k| {
            let sub = ds_ordered.select_top_k(k)?;
            let model_seed = seed::derive(master_seed, &[algo_tag, k as u64]);
            let out = run_cv(&sub, config, scheme, model_seed, pooling, metric_opts)?;
            Ok(SweepRow { k, summary: out.summary })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        algorithm: algo.id().to_string(),
        rmse_star_attempted: ds_ordered.has_ci() || metric_opts.global_epsilon.is_some(),
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Baseline {
    /// One table per algorithm against its own best row.
    PerAlgorithm,
    /// One table against the best row over all algorithms.
    Global,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub model: String,
    pub algorithm: String,
    pub k: usize,
    pub pearson: Option<f64>,
    /// `None` when the test is undefined for this pair (|r| = 1 or no r).
    pub z_stat: Option<f64>,
    pub p_value: Option<f64>,
    pub significant_at_05: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub baseline: String,
    pub baseline_pearson: f64,
    pub n: usize,
    pub rows: Vec<ComparisonRow>,
}

fn model_id(algo: &str, k: usize) -> String {
    format!("{algo}-k{k}")
}

/// Highest mean Pearson; ties keep the first candidate.
fn best_of<'a>(cands: impl Iterator<Item = (&'a str, &'a SweepRow)>) -> Option<(&'a str, &'a SweepRow, f64)> {
    cands
        .filter_map(|(a, r)| r.summary.pearson.mean.map(|p| (a, r, p)))
        .fold(None, |best, c| match best {
            Some(b) if b.2 >= c.2 => Some(b),
            _ => Some(c),
        })
}

/// Fisher-z tests of every model against the selected baseline(s).
pub fn compare_significance(results: &[SweepResult], baseline: Baseline, n: usize) -> Result<Vec<ComparisonTable>> {
    if n < 4 {
        return Err(Error::OutOfRange {
            what: "sample size",
            value: n.to_string(),
            allowed: ">= 4".into(),
        });
    }
    let all = || results.iter().flat_map(|s| s.rows.iter().map(move |r| (s.algorithm.as_str(), r)));
    let table = |base: (&str, &SweepRow, f64), pool: Vec<(&str, &SweepRow)>| {
        let base_id = model_id(base.0, base.1.k);
        let rows = pool
            .into_iter()
            .filter(|(a, r)| model_id(a, r.k) != base_id)
            .map(|(a, r)| {
                let pearson = r.summary.pearson.mean;
                let test = pearson.and_then(|p| fisher_z_compare(base.2, p, n, n).ok());
                ComparisonRow {
                    model: model_id(a, r.k),
                    algorithm: a.to_string(),
                    k: r.k,
                    pearson,
                    z_stat: test.map(|t| t.z_stat),
                    p_value: test.map(|t| t.p_value),
                    significant_at_05: test.map(|t| t.significant_at_05),
                }
            })
            .collect();
        ComparisonTable { baseline: base_id, baseline_pearson: base.2, n, rows }
    };
    let tables: Vec<ComparisonTable> = match baseline {
        Baseline::Global => best_of(all()).map(|b| table(b, all().collect())).into_iter().collect(),
        Baseline::PerAlgorithm => results
            .iter()
            .filter_map(|s| {
                let mine = || s.rows.iter().map(|r| (s.algorithm.as_str(), r));
                best_of(mine()).map(|b| table(b, mine().collect()))
            })
            .collect(),
    };
    if tables.is_empty() {
        return Err(Error::Undefined("no model has a defined Pearson correlation"));
    }
    Ok(tables)
}
