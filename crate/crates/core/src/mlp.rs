//! One-hidden-layer perceptron regressor: standardized inputs, tanh hidden
//! layer, softplus output, MSE loss, trained with Adadelta on mini-batches.

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::data::QualityDataset;
use crate::error::{Error, Result};
use crate::seed;

pub const MLP_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    /// `None` uses one hidden unit per input feature.
    pub hidden_units: Option<usize>,
    pub batch_size: usize,
    pub epochs: usize,
    pub init_half_range: f64,
    pub adadelta_rho: f64,
    pub adadelta_eps: f64,
    pub seed: u64,
}

impl Default for MlpParams {
    fn default() -> Self {
        MlpParams {
            hidden_units: None,
            batch_size: 4,
            epochs: 440,
            init_half_range: 0.05,
            adadelta_rho: 0.95,
            adadelta_eps: 1e-6,
            seed: 0,
        }
    }
}

impl MlpParams {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_units == Some(0) || self.batch_size == 0 || self.epochs == 0 {
            return Err(Error::InvalidParam(
                "hidden_units, batch_size and epochs must be positive".into(),
            ));
        }
        if !(self.init_half_range > 0.0) {
            return Err(Error::InvalidParam("init_half_range must be positive".into()));
        }
        if !(self.adadelta_rho > 0.0 && self.adadelta_rho < 1.0) || !(self.adadelta_eps > 0.0) {
            return Err(Error::InvalidParam("adadelta rho must lie in (0,1), eps > 0".into()));
        }
        Ok(())
    }
}

/// I.i.d. uniform draws on `[-half_range, half_range]`.
pub fn init_uniform(len: usize, half_range: f64, seed: u64) -> Result<Vec<f64>> {
    if !(half_range > 0.0) {
        return Err(Error::InvalidParam("half_range must be positive".into()));
    }
    let mut rng = seed::rng(seed);
    Ok((0..len).map(|_| rng.random_range(-half_range..=half_range)).collect())
}

/// `ln(1 + e^u)` without overflow.
pub fn softplus(u: f64) -> f64 {
    u.max(0.0) + (-u.abs()).exp().ln_1p()
}

fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpWeights {
    /// `w1[h][f]`: input `f` to hidden unit `h`.
    pub w1: Vec<Vec<f64>>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

impl MlpWeights {
    pub fn zeros(inputs: usize, hidden: usize) -> Self {
        MlpWeights {
            w1: vec![vec![0.0; inputs]; hidden],
            b1: vec![0.0; hidden],
            w2: vec![0.0; hidden],
            b2: 0.0,
        }
    }

    pub fn inputs(&self) -> usize {
        self.w1.first().map_or(0, Vec::len)
    }

    pub fn hidden(&self) -> usize {
        self.w1.len()
    }

    /// Parameters as one vector: w1 (hidden-major), b1, w2, b2.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.w1.iter().flatten().copied().collect();
        v.extend(&self.b1);
        v.extend(&self.w2);
        v.push(self.b2);
        v
    }

    pub fn from_flat(inputs: usize, hidden: usize, flat: &[f64]) -> Self {
        let layout = Layout { inputs, hidden };
        debug_assert_eq!(flat.len(), layout.len());
        MlpWeights {
            w1: flat[..inputs * hidden].chunks(inputs.max(1)).map(<[f64]>::to_vec).collect(),
            b1: flat[layout.b1()..layout.w2()].to_vec(),
            w2: flat[layout.w2()..layout.b2()].to_vec(),
            b2: flat[layout.b2()],
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Layout {
    inputs: usize,
    hidden: usize,
}

impl Layout {
    fn b1(&self) -> usize {
        self.inputs * self.hidden
    }
    fn w2(&self) -> usize {
        self.b1() + self.hidden
    }
    fn b2(&self) -> usize {
        self.w2() + self.hidden
    }
    fn len(&self) -> usize {
        self.b2() + 1
    }

    /// Hidden activations into `h`; returns the output pre-activation.
    fn forward(&self, theta: &[f64], x: &[f64], h: &mut [f64]) -> f64 {
        let (f, b1, w2) = (self.inputs, self.b1(), self.w2());
        let mut u = theta[self.b2()];
        for j in 0..self.hidden {
            let row = &theta[j * f..(j + 1) * f];
            let a: f64 = row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + theta[b1 + j];
            h[j] = a.tanh();
            u += theta[w2 + j] * h[j];
        }
        u
    }

    /// Adds the gradient of the batch-mean squared error to `grad` (zeroed
    /// here first) and returns the loss.
    fn loss_grad(&self, theta: &[f64], xs: &[&[f64]], ts: &[f64], grad: &mut [f64], h: &mut [f64]) -> f64 {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let (f, b1, w2, b2) = (self.inputs, self.b1(), self.w2(), self.b2());
        let inv_b = 1.0 / xs.len() as f64;
        let mut loss = 0.0;
        for (x, &t) in xs.iter().zip(ts) {
            let u = self.forward(theta, x, h);
            let err = softplus(u) - t;
            loss += err * err * inv_b;
            let delta = 2.0 * err * inv_b * sigmoid(u);
            grad[b2] += delta;
            for j in 0..self.hidden {
                grad[w2 + j] += delta * h[j];
                let dh = delta * theta[w2 + j] * (1.0 - h[j] * h[j]);
                grad[b1 + j] += dh;
                let g = &mut grad[j * f..(j + 1) * f];
                for (gi, xi) in g.iter_mut().zip(x.iter()) {
                    *gi += dh * xi;
                }
            }
        }
        loss
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub format_version: u32,
    pub input_mean: Vec<f64>,
    pub input_std: Vec<f64>,
    pub weights: MlpWeights,
    pub hidden_activation: String,
    pub output_activation: String,
    pub params: MlpParams,
    /// Mean training MSE of every epoch.
    pub epoch_losses: Vec<f64>,
    pub final_train_mse: f64,
}

impl MlpModel {
    /// Wraps bare weights with identity normalization.
    pub fn from_weights(weights: MlpWeights) -> Self {
        let f = weights.inputs();
        MlpModel {
            format_version: MLP_FORMAT_VERSION,
            input_mean: vec![0.0; f],
            input_std: vec![1.0; f],
            hidden_activation: "tanh".into(),
            output_activation: "softplus".into(),
            params: MlpParams {
                hidden_units: Some(weights.hidden()),
                ..MlpParams::default()
            },
            weights,
            epoch_losses: Vec::new(),
            final_train_mse: f64::NAN,
        }
    }

    fn layout(&self) -> Layout {
        Layout {
            inputs: self.weights.inputs(),
            hidden: self.weights.hidden(),
        }
    }

    fn normalize(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_mean.len() {
            return Err(Error::LengthMismatch {
                left: x.len(),
                right: self.input_mean.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        Ok(x.iter()
            .zip(self.input_mean.iter().zip(&self.input_std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect())
    }

    /// `softplus(w2 . tanh(W1 x + b1) + b2)` on standardized input.
    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        let xhat = self.normalize(x)?;
        let layout = self.layout();
        let mut h = vec![0.0; layout.hidden];
        Ok(softplus(layout.forward(&self.weights.to_flat(), &xhat, &mut h)))
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        self.forward(x)
    }

    /// Batch-mean squared error on raw inputs.
    pub fn batch_loss(&self, xs: &[Vec<f64>], ts: &[f64]) -> Result<f64> {
        Ok(self.loss_and_gradient(xs, ts)?.0)
    }

    /// Exact backpropagated gradient of the batch-mean squared error.
    pub fn gradient(&self, xs: &[Vec<f64>], ts: &[f64]) -> Result<MlpWeights> {
        Ok(self.loss_and_gradient(xs, ts)?.1)
    }

    fn loss_and_gradient(&self, xs: &[Vec<f64>], ts: &[f64]) -> Result<(f64, MlpWeights)> {
        if xs.is_empty() {
            return Err(Error::EmptyInput);
        }
        if xs.len() != ts.len() {
            return Err(Error::LengthMismatch {
                left: xs.len(),
                right: ts.len(),
            });
        }
        let xhat = xs.iter().map(|x| self.normalize(x)).collect::<Result<Vec<_>>>()?;
        let refs: Vec<&[f64]> = xhat.iter().map(Vec::as_slice).collect();
        let layout = self.layout();
        let theta = self.weights.to_flat();
        let mut grad = vec![0.0; layout.len()];
        let mut h = vec![0.0; layout.hidden];
        let loss = layout.loss_grad(&theta, &refs, ts, &mut grad, &mut h);
        Ok((loss, MlpWeights::from_flat(layout.inputs, layout.hidden, &grad)))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: MlpModel = serde_json::from_str(s)?;
        if m.format_version != MLP_FORMAT_VERSION {
            return Err(Error::Version(m.format_version));
        }
        Ok(m)
    }
}

fn standardization(ds: &QualityDataset) -> (Vec<f64>, Vec<f64>) {
    let n = ds.len() as f64;
    (0..ds.feature_count())
        .map(|j| {
            let col = ds.column(j);
            let mean = col.iter().sum::<f64>() / n;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            let std = var.sqrt();
            (mean, if std > 0.0 { std } else { 1.0 })
        })
        .unzip()
}

/// Trains on the whole dataset. Each epoch visits the rows in a fresh seeded
/// order in mini-batches of `batch_size`.
pub fn train_adadelta(ds: &QualityDataset, params: &MlpParams) -> Result<MlpModel> {
    params.validate()?;
    if ds.len() < params.batch_size {
        return Err(Error::InvalidParam(format!(
            "need at least {} samples, got {}",
            params.batch_size,
            ds.len()
        )));
    }
    let (mean, std) = standardization(ds);
    let layout = Layout {
        inputs: ds.feature_count(),
        hidden: params.hidden_units.unwrap_or(ds.feature_count()),
    };
    let xhat: Vec<Vec<f64>> = ds
        .samples()
        .iter()
        .map(|s| {
            s.features
                .iter()
                .zip(mean.iter().zip(&std))
                .map(|(v, (m, sd))| (v - m) / sd)
                .collect()
        })
        .collect();
    let targets = ds.mos();

    let mut theta = vec![0.0; layout.len()];
    let w1 = init_uniform(layout.b1(), params.init_half_range, seed::derive(params.seed, &[1]))?;
    let w2 = init_uniform(layout.hidden, params.init_half_range, seed::derive(params.seed, &[2]))?;
    theta[..layout.b1()].copy_from_slice(&w1);
    theta[layout.w2()..layout.b2()].copy_from_slice(&w2);

    let (rho, eps) = (params.adadelta_rho, params.adadelta_eps);
    let mut acc_grad = vec![0.0; layout.len()];
    let mut acc_delta = vec![0.0; layout.len()];
    let mut grad = vec![0.0; layout.len()];
    let mut h = vec![0.0; layout.hidden];
    let mut order: Vec<usize> = (0..ds.len()).collect();
    let mut rng = seed::derived_rng(params.seed, &[3]);
    let mut epoch_losses = Vec::with_capacity(params.epochs);

    for epoch in 0..params.epochs {
        order.shuffle(&mut rng);
        let mut epoch_sse = 0.0;
        for (batch, chunk) in order.chunks(params.batch_size).enumerate() {
            let xs: Vec<&[f64]> = chunk.iter().map(|&i| xhat[i].as_slice()).collect();
            let ts: Vec<f64> = chunk.iter().map(|&i| targets[i]).collect();
            let loss = layout.loss_grad(&theta, &xs, &ts, &mut grad, &mut h);
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch });
            }
            epoch_sse += loss * chunk.len() as f64;
            for k in 0..theta.len() {
                let g = grad[k];
                acc_grad[k] = rho * acc_grad[k] + (1.0 - rho) * g * g;
                let step = g * (acc_delta[k] + eps).sqrt() / (acc_grad[k] + eps).sqrt();
                theta[k] -= step;
                acc_delta[k] = rho * acc_delta[k] + (1.0 - rho) * step * step;
            }
        }
        epoch_losses.push(epoch_sse / ds.len() as f64);
    }

    Ok(MlpModel {
        format_version: MLP_FORMAT_VERSION,
        input_mean: mean,
        input_std: std,
        weights: MlpWeights::from_flat(layout.inputs, layout.hidden, &theta),
        hidden_activation: "tanh".into(),
        output_activation: "softplus".into(),
        params: MlpParams {
            hidden_units: Some(layout.hidden),
            ..*params
        },
        final_train_mse: *epoch_losses.last().expect("epochs >= 1"),
        epoch_losses,
    })
}
