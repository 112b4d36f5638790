use std::time::Instant;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{HybridRegressor, InputScale, TargetScale};
use crate::descriptors::draw_rng;
use crate::error::{contract, QnnError, Result};

/// Feature rows paired with scalar targets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
}

impl Dataset {
    pub fn new(x: Vec<Vec<f64>>, y: Vec<f64>) -> Result<Self> {
        if x.is_empty() {
            return Err(contract("dataset is empty"));
        }
        if x.len() != y.len() {
            return Err(contract(format!("{} feature rows but {} targets", x.len(), y.len())));
        }
        let width = x[0].len();
        if let Some(i) = x.iter().position(|r| r.len() != width) {
            return Err(contract(format!("row {i} has {} features, expected {width}", x[i].len())));
        }
        Ok(Dataset { x, y })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.x.first().map_or(0, Vec::len)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    /// Measurement shots for evaluation; training always uses exact expectations.
    pub shots: Option<usize>,
    /// Fit the model's target scale to the training targets before the first update.
    pub normalize_targets: bool,
    /// Fit the model's input scale to the training features before the first update.
    pub scale_inputs: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 25,
            learning_rate: 0.08,
            batch_size: 5,
            seed: 0,
            shots: None,
            normalize_targets: false,
            scale_inputs: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(contract("epochs and batch size must be positive"));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(contract(format!("learning rate {} must be finite and non-negative", self.learning_rate)));
        }
        if self.shots == Some(0) {
            return Err(contract("shots must be positive when given"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Training-set MSE before the first update.
    pub initial_train_loss: f64,
    /// Training-set MSE after each epoch.
    pub train_loss: Vec<f64>,
    /// Validation MSE after each epoch; empty when no validation set is given.
    pub val_loss: Vec<f64>,
    pub wall_time_secs: f64,
    pub final_params: Vec<f64>,
}

/// `(1/N)·Σ(ŷᵢ − yᵢ)²`.
pub fn mse_loss(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    if predictions.is_empty() || predictions.len() != targets.len() {
        return Err(contract(format!(
            "mse needs equal non-empty lengths, got {} and {}",
            predictions.len(),
            targets.len()
        )));
    }
    Ok(predictions.iter().zip(targets).map(|(p, y)| (p - y).powi(2)).sum::<f64>() / predictions.len() as f64)
}

/// `p − lr·g`.
pub fn sgd_step(params: &[f64], grads: &[f64], learning_rate: f64) -> Result<Vec<f64>> {
    if params.len() != grads.len() {
        return Err(contract(format!("{} parameters but {} gradients", params.len(), grads.len())));
    }
    Ok(params.iter().zip(grads).map(|(p, g)| p - learning_rate * g).collect())
}

fn check_batch(model: &HybridRegressor, xs: &[Vec<f64>], ys: &[f64]) -> Result<()> {
    if xs.is_empty() || xs.len() != ys.len() {
        return Err(contract(format!("batch of {} rows and {} targets", xs.len(), ys.len())));
    }
    if let Some(x) = xs.iter().find(|x| x.len() != model.n_features()) {
        return Err(contract(format!("model takes {} features, row has {}", model.n_features(), x.len())));
    }
    Ok(())
}

/// Batch-mean squared error in target-scale units and its gradient in
/// [`HybridRegressor::params`] order.
pub(crate) fn loss_and_gradient(model: &HybridRegressor, xs: &[Vec<f64>], ys: &[f64]) -> Result<(f64, Vec<f64>)> {
    check_batch(model, xs, ys)?;
    let scale = 2.0 / xs.len() as f64;
    let ts = model.target_scale;
    let per_sample: Vec<(f64, Vec<f64>)> = xs
        .par_iter()
        .zip(ys.par_iter())
        .map(|(x, &y)| {
            let t = model.trace(x)?;
            let residual = model.clayer_out.activate(&t.z_out)[0] - ts.to_output(y);
            Ok((residual * residual, model.backward(&t, scale * residual)?))
        })
        .collect::<Result<_>>()?;
    let mut grad = vec![0.0; model.n_params()];
    let mut sq = 0.0;
    for (s, g) in &per_sample {
        sq += s;
        for (acc, v) in grad.iter_mut().zip(g) {
            *acc += v;
        }
    }
    Ok((sq / xs.len() as f64, grad))
}

/// Exact gradient of the batch-mean MSE with respect to every model parameter.
///
/// Errors are measured in units of the model's target scale, so with the
/// default scale this is the plain MSE gradient and otherwise it is that
/// gradient divided by `std²`.
pub fn hybrid_loss_gradient(model: &HybridRegressor, xs: &[Vec<f64>], ys: &[f64]) -> Result<Vec<f64>> {
    Ok(loss_and_gradient(model, xs, ys)?.1)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub actual: Vec<f64>,
    pub predicted: Vec<f64>,
}

impl Prediction {
    pub fn mse(&self) -> Result<f64> {
        mse_loss(&self.predicted, &self.actual)
    }

    pub fn residuals(&self) -> Vec<f64> {
        self.predicted.iter().zip(&self.actual).map(|(p, a)| p - a).collect()
    }
}

pub fn predict(model: &HybridRegressor, data: &Dataset) -> Result<Prediction> {
    check_batch(model, &data.x, &data.y)?;
    let predicted = data.x.par_iter().map(|x| model.forward(x)).collect::<Result<_>>()?;
    Ok(Prediction { actual: data.y.clone(), predicted })
}

/// Predictions with the quantum layer estimated from `shots` samples; sample `i` uses seed stream `i`.
pub fn predict_sampled(model: &HybridRegressor, data: &Dataset, shots: usize, seed: u64) -> Result<Prediction> {
    check_batch(model, &data.x, &data.y)?;
    let predicted = data
        .x
        .par_iter()
        .enumerate()
        .map(|(i, x)| model.forward_sampled(x, shots, seed.wrapping_add((i as u64) << 20)))
        .collect::<Result<_>>()?;
    Ok(Prediction { actual: data.y.clone(), predicted })
}

/// Pearson correlation coefficient.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(contract("pearson needs two equal-length series of at least two values"));
    }
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(QnnError::ZeroVariance {
            column: if saa == 0.0 { "first series" } else { "second series" }.into(),
        });
    }
    Ok(sab / (saa * sbb).sqrt())
}

/// Mini-batch SGD over `cfg.epochs` passes; batch order is reshuffled every
/// epoch from the seed, so identical inputs give bit-identical histories.
pub fn fit(
    model: &mut HybridRegressor,
    train: &Dataset,
    val: Option<&Dataset>,
    cfg: &TrainConfig,
) -> Result<TrainReport> {
    cfg.validate()?;
    check_batch(model, &train.x, &train.y)?;
    if let Some(v) = val {
        check_batch(model, &v.x, &v.y)?;
    }
    let start = Instant::now();
    if cfg.normalize_targets {
        model.target_scale = TargetScale::fit(&train.y)?;
    }
    if cfg.scale_inputs {
        model.input_scale = InputScale::fit(&train.x)?;
    }
    let initial_train_loss = predict(model, train)?.mse()?;
    let mut train_loss = Vec::with_capacity(cfg.epochs);
    let mut val_loss = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let mut order: Vec<usize> = (0..train.len()).collect();
        order.shuffle(&mut draw_rng(cfg.seed, epoch + 1));
        let n_batches = order.len().div_ceil(cfg.batch_size);
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let xs: Vec<Vec<f64>> = chunk.iter().map(|&i| train.x[i].clone()).collect();
            let ys: Vec<f64> = chunk.iter().map(|&i| train.y[i]).collect();
            let diverged = QnnError::TrainingDiverged { epoch: epoch + 1, batch: b + 1 };
            let (loss, grad) = loss_and_gradient(model, &xs, &ys)?;
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(diverged);
            }
            let updated = sgd_step(&model.params(), &grad, cfg.learning_rate)?;
            model.set_params(&updated)?;
            log::trace!("epoch {} batch {}/{n_batches}: loss {loss:.6}", epoch + 1, b + 1);
        }
        let tl = predict(model, train)?.mse()?;
        if !tl.is_finite() {
            return Err(QnnError::TrainingDiverged { epoch: epoch + 1, batch: n_batches });
        }
        train_loss.push(tl);
        if let Some(v) = val {
            val_loss.push(predict(model, v)?.mse()?);
        }
        log::info!(
            "epoch {}/{}: train mse {tl:.6}{}",
            epoch + 1,
            cfg.epochs,
            val_loss.last().map(|v| format!(", val mse {v:.6}")).unwrap_or_default()
        );
    }
    Ok(TrainReport {
        initial_train_loss,
        train_loss,
        val_loss,
        wall_time_secs: start.elapsed().as_secs_f64(),
        final_params: model.params(),
    })
}
