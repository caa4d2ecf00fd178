use std::str::FromStr;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::algo::ModelFactory;
use crate::data::QualityDataset;
use crate::error::{Error, Result};
use crate::metrics::{EvalReport, MetricOptions};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CvKind {
    StratifiedKfold,
    Loo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CvScheme {
    pub kind: CvKind,
    /// Fold count; ignored for LOO.
    pub k: usize,
    /// Equal-frequency MOS bins used for stratification.
    pub n_bins: usize,
    pub repeats: usize,
    /// Keys the split of every repeat.
    pub seed: u64,
}

impl CvScheme {
    pub fn kfold(k: usize, repeats: usize, seed: u64) -> Self {
        CvScheme { kind: CvKind::StratifiedKfold, k, n_bins: 5, repeats, seed }
    }

    pub fn loo() -> Self {
        CvScheme { kind: CvKind::Loo, k: 0, n_bins: 1, repeats: 1, seed: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.repeats == 0 {
            return Err(Error::InvalidParam("repeats must be at least 1".into()));
        }
        if self.kind == CvKind::StratifiedKfold && (self.k < 2 || self.n_bins == 0) {
            return Err(Error::InvalidParam("k-fold needs k >= 2 and n_bins >= 1".into()));
        }
        Ok(())
    }

    /// Folds for one repeat.
    pub fn folds(&self, ds: &QualityDataset, repeat: usize) -> Result<Vec<Vec<usize>>> {
        match self.kind {
            CvKind::Loo => Ok((0..ds.len()).map(|i| vec![i]).collect()),
            CvKind::StratifiedKfold => {
                let s = seed::derive(self.seed, &[seed::tag("cv-split"), repeat as u64]);
                stratified_kfold(ds, self.k, self.n_bins, s)
            }
        }
    }
}

/// Splits row indices into `k` folds whose MOS distributions match.
///
/// Rows are ranked by (MOS, index) and cut into `n_bins` equal-frequency
/// bins; each bin is shuffled and dealt round-robin, the dealing position
/// carrying over from one bin to the next.
pub fn stratified_kfold(ds: &QualityDataset, k: usize, n_bins: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    let n = ds.len();
    if k == 0 || k > n {
        return Err(Error::OutOfRange {
            what: "fold count",
            value: k.to_string(),
            allowed: format!("1..={n}"),
        });
    }
    if n_bins == 0 {
        return Err(Error::InvalidParam("n_bins must be at least 1".into()));
    }
    let mos = ds.mos();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| mos[a].total_cmp(&mos[b]).then(a.cmp(&b)));
    let mut bins = vec![Vec::new(); n_bins];
    for (rank, &i) in order.iter().enumerate() {
        bins[rank * n_bins / n].push(i);
    }
    let mut rng = seed::rng(seed);
    let mut folds = vec![Vec::with_capacity(n / k + 1); k];
    let mut next = 0usize;
    for mut bin in bins {
        bin.shuffle(&mut rng);
        for i in bin {
            folds[next % k].push(i);
            next += 1;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

/// Which rows a fold's model is scored on. `Training` exists to exercise
/// the plumbing; real evaluations use `HeldOut`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalSet {
    HeldOut,
    Training,
}

/// Trains one model per fold (on every other fold) and returns, per fold,
/// `(row, prediction)` pairs for the requested evaluation rows.
pub fn cross_predict(
    ds: &QualityDataset,
    factory: &dyn ModelFactory,
    folds: &[Vec<usize>],
    repeat: usize,
    model_seed: u64,
    eval: EvalSet,
) -> Result<Vec<Vec<(usize, f64)>>> {
    let n = ds.len();
    folds
        .par_iter()
        .enumerate()
        .map(|(f, test)| {
            let wrap = |e: Error| Error::Fold { repeat, fold: f, source: Box::new(e) };
            let mut in_test = vec![false; n];
            test.iter().for_each(|&i| in_test[i] = true);
            let train: Vec<usize> = (0..n).filter(|&i| !in_test[i]).collect();
            let train_ds = ds.subset(&train).map_err(wrap)?;
            let s = seed::derive(model_seed, &[repeat as u64, f as u64]);
            let model = factory.fit(&train_ds, s).map_err(wrap)?;
            let rows = match eval {
                EvalSet::HeldOut => test,
                EvalSet::Training => &train,
            };
            rows.iter()
                .map(|&i| Ok((i, model.predict_row(&ds.samples()[i].features).map_err(wrap)?)))
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricPooling {
    /// Metrics on all held-out predictions of a repeat at once.
    #[default]
    Pooled,
    /// Metrics per fold, averaged over the folds of a repeat.
    PerFold,
}

impl FromStr for MetricPooling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pooled" => Ok(MetricPooling::Pooled),
            "perfold" => Ok(MetricPooling::PerFold),
            _ => Err(Error::OutOfRange {
                what: "metric pooling",
                value: s.into(),
                allowed: "pooled, perfold".into(),
            }),
        }
    }
}

/// Mean and sample standard deviation over repeats. `None` when any repeat
/// left the metric undefined (mean) or fewer than two repeats exist (std).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricStat {
    pub mean: Option<f64>,
    pub std: Option<f64>,
}

impl MetricStat {
    pub fn from_values(values: &[Option<f64>]) -> Self {
        let Some(v) = values.iter().copied().collect::<Option<Vec<f64>>>() else {
            return MetricStat { mean: None, std: None };
        };
        if v.is_empty() {
            return MetricStat { mean: None, std: None };
        }
        let m = v.iter().sum::<f64>() / v.len() as f64;
        let std = (v.len() >= 2)
            .then(|| (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64).sqrt());
        MetricStat { mean: Some(m), std }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub n_repeats: usize,
    pub rmse: MetricStat,
    pub rmse_star: MetricStat,
    pub pearson: MetricStat,
    pub spearman: MetricStat,
    pub outlier_ratio: MetricStat,
}

impl MetricSummary {
    pub fn from_reports(reports: &[EvalReport]) -> Self {
        let stat = |f: fn(&EvalReport) -> Option<f64>| {
            MetricStat::from_values(&reports.iter().map(f).collect::<Vec<_>>())
        };
        MetricSummary {
            n_repeats: reports.len(),
            rmse: stat(|r| Some(r.rmse)),
            rmse_star: stat(|r| Some(r.rmse_star)),
            pearson: stat(|r| r.pearson),
            spearman: stat(|r| r.spearman),
            outlier_ratio: stat(|r| r.outlier_ratio),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvOutcome {
    /// One report per repeat.
    pub repeats: Vec<EvalReport>,
    pub summary: MetricSummary,
}

fn mean_report(reports: &[EvalReport], n: usize) -> EvalReport {
    let avg = |f: fn(&EvalReport) -> Option<f64>| -> Option<f64> {
        let v: Option<Vec<f64>> = reports.iter().map(f).collect();
        v.map(|v| v.iter().sum::<f64>() / v.len() as f64)
    };
    EvalReport {
        rmse: avg(|r| Some(r.rmse)).expect("always defined"),
        rmse_star: avg(|r| Some(r.rmse_star)).expect("always defined"),
        pearson: avg(|r| r.pearson),
        spearman: avg(|r| r.spearman),
        outlier_ratio: avg(|r| r.outlier_ratio),
        n,
    }
}

/// Repeated cross-validation. Splits are keyed by `scheme.seed`, model fits
/// by `model_seed`, both further by repeat and fold.
pub fn run_cv(
    ds: &QualityDataset,
    factory: &dyn ModelFactory,
    scheme: &CvScheme,
    model_seed: u64,
    pooling: MetricPooling,
    metric_opts: &MetricOptions,
) -> Result<CvOutcome> {
    scheme.validate()?;
    let mos = ds.mos();
    let ci = ds.ci95();
    let repeats: Vec<EvalReport> = (0..scheme.repeats)
        .into_par_iter()
        .map(|r| {
            let folds = scheme.folds(ds, r)?;
            let preds = cross_predict(ds, factory, &folds, r, model_seed, EvalSet::HeldOut)?;
            match pooling {
                MetricPooling::Pooled => {
                    let mut pred = vec![f64::NAN; ds.len()];
                    for (i, p) in preds.into_iter().flatten() {
                        pred[i] = p;
                    }
                    EvalReport::compute(&pred, &mos, ci.as_deref(), metric_opts)
                }
                MetricPooling::PerFold => {
                    let per: Vec<EvalReport> = preds
                        .iter()
                        .map(|fold| {
                            let p: Vec<f64> = fold.iter().map(|x| x.1).collect();
                            let a: Vec<f64> = fold.iter().map(|x| mos[x.0]).collect();
                            let c: Option<Vec<f64>> =
                                ci.as_ref().map(|c| fold.iter().map(|x| c[x.0]).collect());
                            EvalReport::compute(&p, &a, c.as_deref(), metric_opts)
                        })
                        .collect::<Result<_>>()?;
                    Ok(mean_report(&per, ds.len()))
                }
            }
        })
        .collect::<Result<_>>()?;
    Ok(CvOutcome { summary: MetricSummary::from_reports(&repeats), repeats })
}
