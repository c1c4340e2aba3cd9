//! Deterministic federated-learning simulator for intrusion detectors with a
//! latent-space autoencoder defense against poisoning.
//!
//! The server-side defense extracts each update's penultimate-layer weight
//! matrix, compresses its rows through a pre-trained autoencoder, scores the
//! latent against the global model's latent with RBF-kernel CKA, splits the
//! scores into two groups with exact 1-D 2-means and averages only the larger
//! group. Label flipping, GAN-crafted samples, weight scaling and a
//! median-style model poisoning attack are provided to exercise it.

pub mod error;
pub mod matrix;
pub mod nn;

pub mod attacks;
pub mod data;
pub mod defense;
pub mod experiment;
pub mod fl;

pub use error::{Error, Result};
pub use matrix::Matrix;
