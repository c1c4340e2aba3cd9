use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::plr::{extract_plr, PlrMatrix};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::nn::{self, Activation, ModelParams, ModelSpec, OptimizerKind, OutputKind, TrainConfig};

/// Autoencoder shape and pre-training schedule.
///
/// The default is the 512-128-64 encoder with a 16-wide bottleneck, mirrored
/// decoder with a tanh output, trained for 20 epochs of Adam at lr 0.001.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AeConfig {
    pub hidden: Vec<usize>,
    pub latent: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Internal organizations that pre-train copies of the global model.
    pub orgs: usize,
}

impl Default for AeConfig {
    fn default() -> Self {
        Self {
            hidden: vec![512, 128, 64],
            latent: 16,
            epochs: 20,
            learning_rate: 0.001,
            batch_size: 16,
            orgs: crate::data::DEFAULT_ORGS,
        }
    }
}

impl AeConfig {
    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            momentum: 0.0,
            optimizer: OptimizerKind::Adam,
            seed,
        }
    }

    pub fn spec(&self, input_dim: usize) -> Result<ModelSpec> {
        let mut dims = vec![input_dim];
        dims.extend_from_slice(&self.hidden);
        dims.push(self.latent);
        dims.extend(self.hidden.iter().rev());
        dims.push(input_dim);

        let depth = self.hidden.len();
        let mut acts = vec![Activation::Relu; depth];
        acts.push(Activation::None);
        acts.extend(std::iter::repeat_n(Activation::Relu, depth));
        acts.push(Activation::Tanh);
        ModelSpec::new(dims, acts, OutputKind::Linear)
    }
}

/// Bottleneck output of the encoder, one row per PLR row.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentMatrix(pub Matrix);

impl LatentMatrix {
    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Autoencoder {
    pub spec: ModelSpec,
    pub params: ModelParams,
    /// Number of leading layers that make up the encoder.
    pub encoder_depth: usize,
}

impl Autoencoder {
    pub fn new(input_dim: usize, cfg: &AeConfig, seed: u64) -> Result<Self> {
        let spec = cfg.spec(input_dim)?;
        let params = ModelParams::init(&spec, &mut ChaCha8Rng::seed_from_u64(seed));
        Ok(Self {
            spec,
            params,
            encoder_depth: cfg.hidden.len() + 1,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.spec.input_dim()
    }

    pub fn latent_dim(&self) -> usize {
        self.spec.layer_dims()[self.encoder_depth]
    }

    pub fn encode(&self, rows: &Matrix) -> Result<Matrix> {
        if rows.cols() != self.input_dim() {
            return Err(Error::dim("autoencoder input width", self.input_dim(), rows.cols()));
        }
        Ok(nn::forward_layers(&self.params, &self.spec, rows, self.encoder_depth)?
            .activations
            .pop()
            .expect("non-empty"))
    }

    /// Mean squared reconstruction error over all entries of `rows`.
    pub fn reconstruction_error(&self, rows: &Matrix) -> Result<f64> {
        nn::mse_loss(&self.params, &self.spec, rows, rows)
    }

    pub fn fit(&self, rows: &Matrix, cfg: &TrainConfig) -> Result<Autoencoder> {
        Ok(Autoencoder {
            params: nn::train_autoencoder(&self.params, &self.spec, rows, cfg)?,
            ..self.clone()
        })
    }
}

/// Passes every PLR row through the encoder.
pub fn encode_latent(ae: &Autoencoder, plr: &PlrMatrix) -> Result<LatentMatrix> {
    ae.encode(plr.as_matrix()).map(LatentMatrix)
}

/// Server-side pre-training.
///
/// Each organization trains its own copy of the initial global model for one
/// local round on its data. The PLR rows of those models are pooled and the
/// autoencoder learns to reconstruct them.
pub fn pretrain_ae(
    global: &ModelParams,
    spec: &ModelSpec,
    orgs: &[Dataset],
    ae_cfg: &AeConfig,
    train_cfg: &TrainConfig,
    seed: u64,
) -> Result<Autoencoder> {
    if orgs.is_empty() {
        return Err(Error::Validation("autoencoder pre-training needs at least one organization".into()));
    }
    if let Some(k) = orgs.iter().position(Dataset::is_empty) {
        return Err(Error::Validation(format!("organization {k} has no data")));
    }
    let plrs: Vec<PlrMatrix> = orgs
        .par_iter()
        .enumerate()
        .map(|(k, org)| {
            let cfg = train_cfg.clone().with_seed(seed.wrapping_add(k as u64));
            extract_plr(&nn::train(global, spec, org, &cfg)?)
        })
        .collect::<Result<_>>()?;

    let rows: Vec<&[f64]> = plrs.iter().flat_map(|p| p.as_matrix().iter_rows()).collect();
    let corpus = Matrix::from_rows(&rows)?;
    let ae = Autoencoder::new(corpus.cols(), ae_cfg, seed ^ 0xae)?;
    ae.fit(&corpus, &ae_cfg.train_config(seed))
}
