use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::QualityDataset;
use crate::error::{Error, Result};
use crate::gp::{evolve, GpModel, GpParams, GP_FORMAT_VERSION};
use crate::mlp::{train_adadelta, MlpModel, MlpParams, MLP_FORMAT_VERSION};
use crate::trees::{fit_ensemble, EnsembleParams, ForestModel, FOREST_FORMAT_VERSION};

/// Anything that scores one feature vector.
pub trait Regressor: Send + Sync {
    fn predict_row(&self, x: &[f64]) -> Result<f64>;

    fn predict_dataset(&self, ds: &QualityDataset) -> Result<Vec<f64>> {
        ds.samples().iter().map(|s| self.predict_row(&s.features)).collect()
    }
}

/// Fits a fresh model on a training split. `seed` is the only randomness.
pub trait ModelFactory: Sync {
    fn fit(&self, train: &QualityDataset, seed: u64) -> Result<Box<dyn Regressor>>;
}

impl Regressor for ForestModel {
    fn predict_row(&self, x: &[f64]) -> Result<f64> {
        self.predict(x)
    }
}

impl Regressor for MlpModel {
    fn predict_row(&self, x: &[f64]) -> Result<f64> {
        self.predict(x)
    }
}

impl Regressor for GpModel {
    fn predict_row(&self, x: &[f64]) -> Result<f64> {
        self.predict(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Rf,
    Bg,
    Mlp,
    Gp,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Rf, Algorithm::Bg, Algorithm::Mlp, Algorithm::Gp];

    pub fn id(self) -> &'static str {
        match self {
            Algorithm::Rf => "rf",
            Algorithm::Bg => "bg",
            Algorithm::Mlp => "mlp",
            Algorithm::Gp => "gp",
        }
    }

    /// Folds used by default: 10 for the tree ensembles, 4 for MLP and GP.
    pub fn default_folds(self) -> usize {
        match self {
            Algorithm::Rf | Algorithm::Bg => 10,
            Algorithm::Mlp | Algorithm::Gp => 4,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.id() == s)
            .ok_or_else(|| Error::OutOfRange {
                what: "algorithm",
                value: s.into(),
                allowed: "rf, bg, mlp, gp".into(),
            })
    }
}

/// Hyperparameters for one algorithm; the seed inside is overridden per fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", content = "params", rename_all = "lowercase")]
pub enum AlgorithmConfig {
    Rf(EnsembleParams),
    Bg(EnsembleParams),
    Mlp(MlpParams),
    Gp(GpParams),
}

impl AlgorithmConfig {
    pub fn default_for(algo: Algorithm) -> Self {
        match algo {
            Algorithm::Rf => AlgorithmConfig::Rf(EnsembleParams::random_forest()),
            Algorithm::Bg => AlgorithmConfig::Bg(EnsembleParams::bagging()),
            Algorithm::Mlp => AlgorithmConfig::Mlp(MlpParams::default()),
            Algorithm::Gp => AlgorithmConfig::Gp(GpParams::default()),
        }
    }

    pub fn algorithm(&self) -> Algorithm {
        match self {
            AlgorithmConfig::Rf(_) => Algorithm::Rf,
            AlgorithmConfig::Bg(_) => Algorithm::Bg,
            AlgorithmConfig::Mlp(_) => Algorithm::Mlp,
            AlgorithmConfig::Gp(_) => Algorithm::Gp,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            AlgorithmConfig::Rf(p) | AlgorithmConfig::Bg(p) => p.validate(),
            AlgorithmConfig::Mlp(p) => p.validate(),
            AlgorithmConfig::Gp(p) => p.validate(),
        }
    }

    pub fn train(&self, ds: &QualityDataset, seed: u64) -> Result<TrainedModel> {
        Ok(match self {
            AlgorithmConfig::Rf(p) | AlgorithmConfig::Bg(p) => {
                let mut p = *p;
                p.seed = seed;
                TrainedModel::Forest(fit_ensemble(ds, &p)?)
            }
            AlgorithmConfig::Mlp(p) => TrainedModel::Mlp(train_adadelta(ds, &MlpParams { seed, ..*p })?),
            AlgorithmConfig::Gp(p) => {
                let p = GpParams { seed, ..p.clone() };
                TrainedModel::Gp(evolve(ds, &p)?.model)
            }
        })
    }
}

impl ModelFactory for AlgorithmConfig {
    fn fit(&self, train: &QualityDataset, seed: u64) -> Result<Box<dyn Regressor>> {
        Ok(Box::new(self.train(train, seed)?))
    }
}

/// A fitted model of any algorithm, serializable for `train`/`predict`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "model", rename_all = "lowercase")]
pub enum TrainedModel {
    Forest(ForestModel),
    Mlp(MlpModel),
    Gp(GpModel),
}

impl TrainedModel {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: TrainedModel = serde_json::from_str(s)?;
        let (found, expected) = match &m {
            TrainedModel::Forest(f) => (f.format_version, FOREST_FORMAT_VERSION),
            TrainedModel::Mlp(f) => (f.format_version, MLP_FORMAT_VERSION),
            TrainedModel::Gp(f) => (f.format_version, GP_FORMAT_VERSION),
        };
        if found != expected {
            return Err(Error::Version(found));
        }
        Ok(m)
    }

    pub fn feature_count(&self) -> usize {
        match self {
            TrainedModel::Forest(f) => f.feature_count,
            TrainedModel::Mlp(m) => m.input_mean.len(),
            TrainedModel::Gp(g) => g.feature_names.len(),
        }
    }
}

impl Regressor for TrainedModel {
    fn predict_row(&self, x: &[f64]) -> Result<f64> {
        match self {
            TrainedModel::Forest(m) => m.predict(x),
            TrainedModel::Mlp(m) => m.predict(x),
            TrainedModel::Gp(m) => m.predict(x),
        }
    }
}
