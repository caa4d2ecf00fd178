//! Dataset representation, CSV ingestion and column/row manipulation.

use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

pub const MOS_COLUMN: &str = "MOS";
pub const CI_COLUMN: &str = "CI95";

pub const MOS_MIN: f64 = 1.0;
pub const MOS_MAX: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub features: Vec<f64>,
    pub mos: f64,
    /// Half-width of the 95% confidence interval of the subjective score.
    pub ci95: Option<f64>,
}

/// Feature matrix plus MOS target, immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct QualityDataset {
    column_names: Vec<String>,
    samples: Vec<Sample>,
    has_ci: bool,
}

#[derive(Debug, Clone, Default)]
pub struct SchemaOptions {
    /// When set, only these columns become features (in file order).
    pub whitelist: Option<Vec<String>>,
}

impl QualityDataset {
    pub fn new(column_names: Vec<String>, samples: Vec<Sample>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut seen = HashSet::new();
        for name in &column_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::DuplicateColumn(name.clone()));
            }
        }
        let has_ci = samples[0].ci95.is_some();
        for (i, s) in samples.iter().enumerate() {
            let row = i + 1;
            if s.features.len() != column_names.len() {
                return Err(Error::Arity {
                    row,
                    expected: column_names.len(),
                    found: s.features.len(),
                });
            }
            if !(MOS_MIN..=MOS_MAX).contains(&s.mos) {
                return Err(Error::InvalidValue {
                    row,
                    what: format!("MOS {} outside [1,5]", s.mos),
                });
            }
            match s.ci95 {
                Some(ci) if !(ci >= 0.0) => {
                    return Err(Error::InvalidValue {
                        row,
                        what: format!("negative CI95 {ci}"),
                    })
                }
                Some(_) if !has_ci => {
                    return Err(Error::InvalidValue {
                        row,
                        what: "CI95 present on some rows only".into(),
                    })
                }
                None if has_ci => {
                    return Err(Error::InvalidValue {
                        row,
                        what: "CI95 present on some rows only".into(),
                    })
                }
                _ => {}
            }
        }
        Ok(QualityDataset {
            column_names,
            samples,
            has_ci,
        })
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn has_ci(&self) -> bool {
        self.has_ci
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn feature_count(&self) -> usize {
        self.column_names.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.column_names.iter().position(|c| c == name)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.samples.iter().map(|s| s.features[j]).collect()
    }

    /// Feature values laid out column-major, `[feature][row]`.
    pub fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.feature_count()).map(|j| self.column(j)).collect()
    }

    pub fn mos(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.mos).collect()
    }

    pub fn ci95(&self) -> Option<Vec<f64>> {
        self.has_ci
            .then(|| self.samples.iter().map(|s| s.ci95.unwrap_or(0.0)).collect())
    }

    /// Rows at `indices`, in that order. Indices may repeat.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let samples = indices.iter().map(|&i| self.samples[i].clone()).collect();
        QualityDataset::new(self.column_names.clone(), samples)
    }

    /// Keeps the feature columns at `cols`, in that order.
    pub fn project(&self, cols: &[usize]) -> Self {
        let column_names = cols.iter().map(|&j| self.column_names[j].clone()).collect();
        let samples = self
            .samples
            .iter()
            .map(|s| Sample {
                features: cols.iter().map(|&j| s.features[j]).collect(),
                mos: s.mos,
                ci95: s.ci95,
            })
            .collect();
        QualityDataset {
            column_names,
            samples,
            has_ci: self.has_ci,
        }
    }

    /// Permutes feature columns into ranking order, dropping unranked ones.
    pub fn reorder_by_ranking(&self, ranking: &FeatureRanking) -> Result<Self> {
        let cols = ranking
            .names()
            .map(|name| {
                self.column_index(name)
                    .ok_or_else(|| Error::UnknownColumn(name.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(self.project(&cols))
    }

    pub fn select_top_k(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.feature_count() {
            return Err(Error::OutOfRange {
                what: "feature count k",
                value: k.to_string(),
                allowed: format!("1..={}", self.feature_count()),
            });
        }
        Ok(self.project(&(0..k).collect::<Vec<_>>()))
    }

    /// Row permutation determined solely by `seed`.
    pub fn shuffle(&self, seed: u64) -> Self {
        let perm = shuffled_indices(self.len(), seed);
        QualityDataset {
            column_names: self.column_names.clone(),
            samples: perm.iter().map(|&i| self.samples[i].clone()).collect(),
            has_ci: self.has_ci,
        }
    }

    pub fn read_csv<R: Read>(reader: R, opts: &SchemaOptions) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        if header.is_empty() || header.iter().all(String::is_empty) {
            return Err(Error::EmptyDataset);
        }
        let mos_idx = header
            .iter()
            .position(|h| h == MOS_COLUMN)
            .ok_or_else(|| Error::MissingColumn(MOS_COLUMN.into()))?;
        let ci_idx = header.iter().position(|h| h == CI_COLUMN);

        let feature_idx: Vec<usize> = match &opts.whitelist {
            Some(list) => {
                for name in list {
                    if !header.contains(name) {
                        return Err(Error::MissingColumn(name.clone()));
                    }
                }
                (0..header.len())
                    .filter(|&j| j != mos_idx && Some(j) != ci_idx && list.contains(&header[j]))
                    .collect()
            }
            None => (0..header.len())
                .filter(|&j| j != mos_idx && Some(j) != ci_idx)
                .collect(),
        };
        let column_names: Vec<String> = feature_idx.iter().map(|&j| header[j].clone()).collect();

        let parse = |row: usize, j: usize, raw: &str| -> Result<f64> {
            raw.parse::<f64>().map_err(|_| Error::NonNumeric {
                row,
                column: header[j].clone(),
                value: raw.to_string(),
            })
        };

        let mut samples = Vec::new();
        for (i, record) in rdr.records().enumerate() {
            let record = record?;
            let row = i + 1;
            if record.len() != header.len() {
                return Err(Error::Arity {
                    row,
                    expected: header.len(),
                    found: record.len(),
                });
            }
            let features = feature_idx
                .iter()
                .map(|&j| parse(row, j, &record[j]))
                .collect::<Result<Vec<_>>>()?;
            let mos = parse(row, mos_idx, &record[mos_idx])?;
            let ci95 = ci_idx.map(|j| parse(row, j, &record[j])).transpose()?;
            samples.push(Sample {
                features,
                mos,
                ci95,
            });
        }
        QualityDataset::new(column_names, samples)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let mut header: Vec<&str> = self.column_names.iter().map(String::as_str).collect();
        header.push(MOS_COLUMN);
        if self.has_ci {
            header.push(CI_COLUMN);
        }
        wtr.write_record(&header)?;
        for s in &self.samples {
            let mut rec: Vec<String> = s.features.iter().map(|v| v.to_string()).collect();
            rec.push(s.mos.to_string());
            if let Some(ci) = s.ci95 {
                rec.push(ci.to_string());
            }
            wtr.write_record(&rec)?;
        }
        wtr.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("csv output is utf-8")
    }
}

pub fn load_dataset_csv(path: impl AsRef<Path>, opts: &SchemaOptions) -> Result<QualityDataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    QualityDataset::read_csv(file, opts)
}

pub fn save_dataset_csv(ds: &QualityDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    ds.write_csv(std::io::BufWriter::new(file))
}

pub(crate) fn shuffled_indices(n: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut seed::rng(seed));
    idx
}

/// Scale of the loss-percentage ("Diff") columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiffScale {
    Percent,
    Fraction,
    /// No Diff columns present.
    Absent,
}

/// Inspects the value range of every column whose name ends in `Diff`.
/// All values within [0, 1] reads as fractions, anything larger as percent.
pub fn detect_diff_scale(ds: &QualityDataset) -> DiffScale {
    let cols: Vec<usize> = ds
        .column_names()
        .iter()
        .enumerate()
        .filter(|(_, n)| n.ends_with("Diff"))
        .map(|(j, _)| j)
        .collect();
    if cols.is_empty() {
        return DiffScale::Absent;
    }
    let max = ds
        .samples()
        .iter()
        .flat_map(|s| cols.iter().map(move |&j| s.features[j].abs()))
        .fold(0.0f64, f64::max);
    if max <= 1.0 {
        DiffScale::Fraction
    } else {
        DiffScale::Percent
    }
}

/// Feature names with normalized importances, most important first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRanking {
    entries: Vec<(String, f64)>,
}

impl FeatureRanking {
    /// Normalizes `importances` to sum 1 and sorts descending, ties by name.
    /// An all-zero vector is spread uniformly.
    pub fn from_importances(names: &[String], importances: &[f64]) -> Result<Self> {
        if names.len() != importances.len() {
            return Err(Error::LengthMismatch {
                left: names.len(),
                right: importances.len(),
            });
        }
        if names.is_empty() {
            return Err(Error::EmptyInput);
        }
        if importances.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidParam("importances must be finite and >= 0".into()));
        }
        let total: f64 = importances.iter().sum();
        let mut entries: Vec<(String, f64)> = names
            .iter()
            .zip(importances)
            .map(|(n, &v)| {
                let w = if total > 0.0 {
                    v / total
                } else {
                    1.0 / names.len() as f64
                };
                (n.clone(), w)
            })
            .collect();
        entries.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        Ok(FeatureRanking { entries })
    }

    /// A ranking that keeps `names` in the given order (importances uniform).
    pub fn ordered(names: &[String]) -> Self {
        let w = 1.0 / names.len().max(1) as f64;
        FeatureRanking {
            entries: names.iter().map(|n| (n.clone(), w)).collect(),
        }
    }

    pub fn entries(&self) -> &[(String, f64)] {
        &self.entries
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(n, _)| n.as_str())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["rank", "feature", "importance"])?;
        for (i, (name, w)) in self.entries.iter().enumerate() {
            wtr.write_record([(i + 1).to_string(), name.clone(), w.to_string()])?;
        }
        wtr.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    /// Reads a ranking CSV; rows are taken in file order.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        let name_idx = header
            .iter()
            .position(|h| h == "feature")
            .ok_or_else(|| Error::MissingColumn("feature".into()))?;
        let imp_idx = header.iter().position(|h| h == "importance");
        let mut entries = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let w = match imp_idx {
                Some(j) => rec[j].parse::<f64>().map_err(|_| Error::NonNumeric {
                    row: i + 1,
                    column: "importance".into(),
                    value: rec[j].to_string(),
                })?,
                None => 0.0,
            };
            entries.push((rec[name_idx].to_string(), w));
        }
        if entries.is_empty() {
            return Err(Error::EmptyInput);
        }
        Ok(FeatureRanking { entries })
    }
}
