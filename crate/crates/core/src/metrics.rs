//! Evaluation statistics for quality predictions: RMSE, epsilon-insensitive
//! RMSE, Pearson and Spearman correlation, outlier ratio, subjective CI and
//! the Fisher-z comparison of two correlation coefficients.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Two-tailed 95% quantile of the standard normal.
pub const Z_95: f64 = 1.959964;
pub const SIGNIFICANCE_LEVEL: f64 = 0.05;

fn check_pair(pred: &[f64], actual: &[f64]) -> Result<()> {
    if pred.len() != actual.len() {
        return Err(Error::LengthMismatch {
            left: pred.len(),
            right: actual.len(),
        });
    }
    if pred.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(())
}

pub fn rmse(pred: &[f64], actual: &[f64]) -> Result<f64> {
    rmse_dof(pred, actual, 0)
}

/// RMSE with the denominator reduced to `N - dof`.
pub fn rmse_dof(pred: &[f64], actual: &[f64], dof: usize) -> Result<f64> {
    check_pair(pred, actual)?;
    let n = pred.len();
    if dof >= n {
        return Err(Error::OutOfRange {
            what: "degrees-of-freedom correction",
            value: dof.to_string(),
            allowed: format!("0..{n}"),
        });
    }
    let sse: f64 = pred
        .iter()
        .zip(actual)
        .map(|(p, a)| (p - a) * (p - a))
        .sum();
    Ok((sse / (n - dof) as f64).sqrt())
}

/// Source of the insensitivity margin for [`rmse_epsilon`].
#[derive(Debug, Clone, Copy)]
pub enum Epsilon<'a> {
    PerSample(&'a [f64]),
    Global(f64),
}

/// Epsilon-insensitive RMSE: errors inside each sample's margin count as 0.
pub fn rmse_epsilon(pred: &[f64], actual: &[f64], eps: Epsilon<'_>) -> Result<f64> {
    rmse_epsilon_dof(pred, actual, eps, 0)
}

pub fn rmse_epsilon_dof(pred: &[f64], actual: &[f64], eps: Epsilon<'_>, dof: usize) -> Result<f64> {
    check_pair(pred, actual)?;
    let n = pred.len();
    if dof >= n {
        return Err(Error::OutOfRange {
            what: "degrees-of-freedom correction",
            value: dof.to_string(),
            allowed: format!("0..{n}"),
        });
    }
    let margin = |i: usize| match eps {
        Epsilon::PerSample(ci) => ci[i],
        Epsilon::Global(e) => e,
    };
    match eps {
        Epsilon::PerSample(ci) => {
            if ci.len() != n {
                return Err(Error::LengthMismatch {
                    left: n,
                    right: ci.len(),
                });
            }
            if ci.iter().any(|c| !(*c >= 0.0)) {
                return Err(Error::InvalidParam("negative confidence interval".into()));
            }
        }
        Epsilon::Global(e) if !(e >= 0.0) => {
            return Err(Error::InvalidParam("negative epsilon".into()))
        }
        _ => {}
    }
    let sse: f64 = (0..n)
        .map(|i| {
            let e = ((pred[i] - actual[i]).abs() - margin(i)).max(0.0);
            e * e
        })
        .sum();
    Ok((sse / (n - dof) as f64).sqrt())
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    if x.len() < 2 {
        return Err(Error::Undefined("correlation needs at least two points"));
    }
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Undefined("correlation of a constant series"));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// 1-based ranks; tied values share the mean of the ranks they span.
pub fn fractional_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = r;
        }
        i = j + 1;
    }
    ranks
}

pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    pearson(&fractional_ranks(x), &fractional_ranks(y))
}

/// Fraction of samples whose absolute error exceeds their CI half-width.
pub fn outlier_ratio(pred: &[f64], actual: &[f64], ci95: &[f64]) -> Result<f64> {
    check_pair(pred, actual)?;
    if ci95.len() != pred.len() {
        return Err(Error::LengthMismatch {
            left: pred.len(),
            right: ci95.len(),
        });
    }
    if ci95.iter().any(|c| !(*c >= 0.0)) {
        return Err(Error::InvalidParam("negative confidence interval".into()));
    }
    let outliers = pred
        .iter()
        .zip(actual)
        .zip(ci95)
        .filter(|((p, a), c)| (*p - *a).abs() > **c)
        .count();
    Ok(outliers as f64 / pred.len() as f64)
}

/// 95% CI half-width of one stimulus' raw votes: `1.96 * s / sqrt(M)`.
pub fn ci95_from_scores(scores: &[f64]) -> Result<f64> {
    let m = scores.len();
    if m < 2 {
        return Err(Error::InvalidParam(format!(
            "need at least 2 scores for a confidence interval, got {m}"
        )));
    }
    let mu = mean(scores);
    let var = scores.iter().map(|s| (s - mu) * (s - mu)).sum::<f64>() / (m - 1) as f64;
    Ok(1.96 * var.sqrt() / (m as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignificanceResult {
    pub z_stat: f64,
    pub p_value: f64,
    pub significant_at_05: bool,
}

/// Tests whether two correlation coefficients differ, via Fisher's z.
pub fn fisher_z_compare(r1: f64, r2: f64, n1: usize, n2: usize) -> Result<SignificanceResult> {
    for r in [r1, r2] {
        if !(r.abs() < 1.0) {
            return Err(Error::OutOfRange {
                what: "correlation coefficient",
                value: r.to_string(),
                allowed: "(-1, 1)".into(),
            });
        }
    }
    for n in [n1, n2] {
        if n <= 3 {
            return Err(Error::OutOfRange {
                what: "sample size",
                value: n.to_string(),
                allowed: ">= 4".into(),
            });
        }
    }
    let se = (1.0 / (n1 - 3) as f64 + 1.0 / (n2 - 3) as f64).sqrt();
    let z_stat = (r1.atanh() - r2.atanh()) / se;
    let std = Normal::standard();
    let p_value = (2.0 * std.sf(z_stat.abs())).clamp(0.0, 1.0);
    Ok(SignificanceResult {
        z_stat,
        p_value,
        significant_at_05: p_value <= SIGNIFICANCE_LEVEL,
    })
}

#[derive(Debug, Clone, Copy, Default)]
pub struct MetricOptions {
    /// Margin for RMSE* when the data carries no CI. `None` means 0.
    pub global_epsilon: Option<f64>,
    /// Denominator correction `N - d` for both RMSE variants.
    pub dof_correction: usize,
}

/// One model evaluation. Correlations are `None` when undefined (a constant
/// prediction series), outlier ratio is `None` without CI data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rmse: f64,
    pub rmse_star: f64,
    pub pearson: Option<f64>,
    pub spearman: Option<f64>,
    pub outlier_ratio: Option<f64>,
    pub n: usize,
}

impl EvalReport {
    pub fn compute(
        pred: &[f64],
        actual: &[f64],
        ci95: Option<&[f64]>,
        opts: &MetricOptions,
    ) -> Result<Self> {
        let rmse = rmse_dof(pred, actual, opts.dof_correction)?;
        let eps = match ci95 {
            Some(ci) => Epsilon::PerSample(ci),
            None => Epsilon::Global(opts.global_epsilon.unwrap_or(0.0)),
        };
        let rmse_star = rmse_epsilon_dof(pred, actual, eps, opts.dof_correction)?;
        let outlier_ratio = ci95.map(|ci| outlier_ratio(pred, actual, ci)).transpose()?;
        Ok(EvalReport {
            rmse,
            rmse_star,
            pearson: defined(pearson(pred, actual))?,
            spearman: defined(spearman(pred, actual))?,
            outlier_ratio,
            n: pred.len(),
        })
    }
}

fn defined(r: Result<f64>) -> Result<Option<f64>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::Undefined(_)) => Ok(None),
        Err(e) => Err(e),
    }
}
