//! Minimal dense neural-network engine.
//!
//! Enough machinery to train the intrusion detectors, the PLR autoencoder and
//! the attackers' GAN: fully connected layers, a handful of activations,
//! cross-entropy and MSE losses, SGD with momentum and Adam.

mod network;
mod optim;
mod params;
mod train;

pub(crate) use network::{cross_entropy_grad, forward_layers};
pub use network::{backprop, backward, cross_entropy, forward, mse_loss, predict, softmax_rows, Forward};
pub use optim::{Optimizer, OptimizerKind};
pub use params::{Activation, DenseLayer, ModelParams, ModelSpec, OutputKind, LEAKY_SLOPE};
pub use train::{train, train_autoencoder, train_with, TrainConfig};
