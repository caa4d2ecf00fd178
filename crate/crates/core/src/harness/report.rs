use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::cv::{MetricStat, MetricSummary};
use super::sweep::{ComparisonTable, SweepResult, SweepRow};
use crate::error::{Error, Result};

pub const SUMMARY_CAVEAT: &str = "Significance tests assume the same sample size for every model \
(160 by default) and treat correlations as independent; cross-validated models share data, so \
p-values are indicative only.";

const NA: &str = "NA";

const SWEEP_HEADER: [&str; 12] = [
    "k",
    "n_repeats",
    "rmse_mean",
    "rmse_std",
    "rmse_star_mean",
    "rmse_star_std",
    "pearson_mean",
    "pearson_std",
    "spearman_mean",
    "spearman_std",
    "outlier_ratio_mean",
    "outlier_ratio_std",
];

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| NA.to_string(), |x| x.to_string())
}

pub fn write_sweep_csv<W: Write>(sweep: &SweepResult, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(SWEEP_HEADER)?;
    for row in &sweep.rows {
        let s = &row.summary;
        let mut rec = vec![row.k.to_string(), s.n_repeats.to_string()];
        for m in [&s.rmse, &s.rmse_star, &s.pearson, &s.spearman, &s.outlier_ratio] {
            rec.push(cell(m.mean));
            rec.push(cell(m.std));
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_sweep_csv<R: Read>(reader: R, algorithm: &str, rmse_star_attempted: bool) -> Result<SweepResult> {
    let mut r = csv::Reader::from_reader(reader);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != SWEEP_HEADER {
        return Err(Error::MissingColumn(format!("sweep header {SWEEP_HEADER:?}")));
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let num = |j: usize| -> Result<Option<f64>> {
            match &rec[j] {
                NA => Ok(None),
                v => v.parse().map(Some).map_err(|_| Error::NonNumeric {
                    row: i + 1,
                    column: SWEEP_HEADER[j].to_string(),
                    value: v.to_string(),
                }),
            }
        };
        let int = |j: usize| -> Result<usize> {
            rec[j].parse().map_err(|_| Error::NonNumeric {
                row: i + 1,
                column: SWEEP_HEADER[j].to_string(),
                value: rec[j].to_string(),
            })
        };
        let stat = |j: usize| -> Result<MetricStat> { Ok(MetricStat { mean: num(j)?, std: num(j + 1)? }) };
        rows.push(SweepRow {
            k: int(0)?,
            summary: MetricSummary {
                n_repeats: int(1)?,
                rmse: stat(2)?,
                rmse_star: stat(4)?,
                pearson: stat(6)?,
                spearman: stat(8)?,
                outlier_ratio: stat(10)?,
            },
        });
    }
    Ok(SweepResult { algorithm: algorithm.to_string(), rmse_star_attempted, rows })
}

pub fn write_comparison_csv<W: Write>(tables: &[ComparisonTable], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "baseline",
        "baseline_pearson",
        "n",
        "model",
        "algorithm",
        "k",
        "pearson",
        "z_stat",
        "p_value",
        "significant_at_05",
    ])?;
    for t in tables {
        for r in &t.rows {
            w.write_record([
                t.baseline.clone(),
                t.baseline_pearson.to_string(),
                t.n.to_string(),
                r.model.clone(),
                r.algorithm.clone(),
                r.k.to_string(),
                cell(r.pearson),
                cell(r.z_stat),
                cell(r.p_value),
                r.significant_at_05.map_or_else(|| NA.to_string(), |b| b.to_string()),
            ])?;
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BestEntry {
    pub value: f64,
    pub features: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    NotAttempted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MaybeBest {
    Best(BestEntry),
    Status(Status),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSummary {
    pub max_pearson: Option<BestEntry>,
    pub min_rmse: Option<BestEntry>,
    pub min_rmse_star: MaybeBest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    /// True when the data came from the synthetic generator.
    pub surrogate: bool,
    pub caveat: String,
    pub algorithms: BTreeMap<String, AlgorithmSummary>,
}

/// Best row by `metric` (largest when `maximize`); ties keep the smaller k.
fn best(rows: &[SweepRow], metric: fn(&MetricSummary) -> Option<f64>, maximize: bool) -> Option<BestEntry> {
    rows.iter()
        .filter_map(|r| metric(&r.summary).map(|v| BestEntry { value: v, features: r.k }))
        .fold(None, |acc: Option<BestEntry>, c| match acc {
            Some(a) if (maximize && a.value >= c.value) || (!maximize && a.value <= c.value) => Some(a),
            _ => Some(c),
        })
}

pub fn summarize(sweeps: &[SweepResult], surrogate: bool) -> Summary {
    let algorithms = sweeps
        .iter()
        .map(|s| {
            let star = if s.rmse_star_attempted {
                best(&s.rows, |m| m.rmse_star.mean, false).map_or(MaybeBest::Status(Status::NotAttempted), MaybeBest::Best)
            } else {
                MaybeBest::Status(Status::NotAttempted)
            };
            (
                s.algorithm.clone(),
                AlgorithmSummary {
                    max_pearson: best(&s.rows, |m| m.pearson.mean, true),
                    min_rmse: best(&s.rows, |m| m.rmse.mean, false),
                    min_rmse_star: star,
                },
            )
        })
        .collect();
    Summary { surrogate, caveat: SUMMARY_CAVEAT.to_string(), algorithms }
}

#[derive(Debug, Clone)]
pub struct ReportBundle {
    pub manifest: serde_json::Value,
    pub sweeps: Vec<SweepResult>,
    pub comparisons: Vec<ComparisonTable>,
    pub summary: Summary,
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn json_bytes<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    let mut b = serde_json::to_vec_pretty(v)?;
    b.push(b'\n');
    Ok(b)
}

/// Writes `manifest.json`, `sweep_<algo>.csv` per sweep, `comparison.csv`
/// when tables exist, and `summary.json`. Returns the paths written.
pub fn emit_report(dir: &Path, bundle: &ReportBundle) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let mut put = |name: String, bytes: Vec<u8>| -> Result<()> {
        let p = dir.join(name);
        write_file(&p, &bytes)?;
        written.push(p);
        Ok(())
    };
    put("manifest.json".into(), json_bytes(&bundle.manifest)?)?;
    for s in &bundle.sweeps {
        let mut buf = Vec::new();
        write_sweep_csv(s, &mut buf)?;
        put(format!("sweep_{}.csv", s.algorithm), buf)?;
    }
    if !bundle.comparisons.is_empty() {
        let mut buf = Vec::new();
        write_comparison_csv(&bundle.comparisons, &mut buf)?;
        put("comparison.csv".into(), buf)?;
    }
    put("summary.json".into(), json_bytes(&bundle.summary)?)?;
    Ok(written)
}
