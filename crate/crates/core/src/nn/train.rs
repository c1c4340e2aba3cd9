use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

use super::network::{backprop, cross_entropy_grad, forward, mse_grad};
use super::optim::{Optimizer, OptimizerKind};
use super::params::{ModelParams, ModelSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub optimizer: OptimizerKind,
    pub seed: u64,
}

impl Default for TrainConfig {
    /// Local client training: 3 epochs, batch 2048, momentum SGD at lr 0.001 / 0.9.
    fn default() -> Self {
        Self {
            epochs: 3,
            batch_size: 2048,
            learning_rate: 0.001,
            momentum: 0.9,
            optimizer: OptimizerKind::SgdMomentum,
            seed: 0,
        }
    }
}

impl TrainConfig {
    /// Autoencoder pre-training: 20 epochs of Adam at lr 0.001.
    pub fn autoencoder() -> Self {
        Self {
            epochs: 20,
            batch_size: 16,
            learning_rate: 0.001,
            momentum: 0.0,
            optimizer: OptimizerKind::Adam,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Structural checks. A zero learning rate is accepted here (it makes
    /// training a no-op); experiment configs reject it separately.
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Validation("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Validation("batch_size must be at least 1".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(Error::Validation(format!("learning_rate {} out of range", self.learning_rate)));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Validation(format!("momentum {} not in [0, 1)", self.momentum)));
        }
        Ok(())
    }
}

/// Mini-batch loop shared by every trainer in the crate.
///
/// `batch_grad` receives the current parameters and the row indices of one
/// mini-batch and returns the gradient. Rows are reshuffled each epoch with a
/// generator seeded from `cfg.seed`; the trailing partial batch is kept.
pub fn train_with<F>(mut params: ModelParams, n_rows: usize, cfg: &TrainConfig, mut batch_grad: F) -> Result<ModelParams>
where
    F: FnMut(&ModelParams, &[usize]) -> Result<ModelParams>,
{
    cfg.validate()?;
    if n_rows == 0 {
        return Err(Error::Validation("cannot train on an empty dataset".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut opt = Optimizer::new(cfg.optimizer, cfg.learning_rate, cfg.momentum, &params);
    let mut order: Vec<usize> = (0..n_rows).collect();
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            let grads = batch_grad(&params, batch)?;
            opt.step(&mut params, &grads);
        }
    }
    Ok(params)
}

/// Trains a classifier on mean cross-entropy.
pub fn train(params: &ModelParams, spec: &ModelSpec, data: &Dataset, cfg: &TrainConfig) -> Result<ModelParams> {
    params.check(spec)?;
    if data.is_empty() {
        return Err(Error::Validation("cannot train on an empty dataset".into()));
    }
    if data.dim() != spec.input_dim() {
        return Err(Error::dim("training data width", spec.input_dim(), data.dim()));
    }
    train_with(params.clone(), data.len(), cfg, |p, batch| {
        let x = data.features.select_rows(batch);
        let y: Vec<u8> = batch.iter().map(|&i| data.labels[i]).collect();
        let fwd = forward(p, spec, &x)?;
        let (_, d_logits) = cross_entropy_grad(fwd.logits(), &y);
        Ok(backprop(p, spec, &fwd, &d_logits)?.0)
    })
}

/// Trains an autoencoder to reconstruct `rows` under mean squared error.
pub fn train_autoencoder(
    params: &ModelParams,
    spec: &ModelSpec,
    rows: &Matrix,
    cfg: &TrainConfig,
) -> Result<ModelParams> {
    params.check(spec)?;
    if rows.cols() != spec.input_dim() || spec.output_dim() != spec.input_dim() {
        return Err(Error::dim("autoencoder input", spec.input_dim(), rows.cols()));
    }
    train_with(params.clone(), rows.rows(), cfg, |p, batch| {
        let x = rows.select_rows(batch);
        let fwd = forward(p, spec, &x)?;
        let (_, d_out) = mse_grad(fwd.logits(), &x);
        Ok(backprop(p, spec, &fwd, &d_out)?.0)
    })
}
