//! Server-side robust aggregation.
//!
//! [`fed_lsae_round`] scores each update by RBF-CKA between the autoencoder
//! latent of its penultimate-layer weights and the latent of the current
//! global model, clusters the scores and averages the larger cluster.
//! [`fedcc_round`] is the same pipeline scored on raw penultimate weights.

mod autoencoder;
mod cka;
mod cluster;
mod fedavg;
mod plr;
mod round;

pub use autoencoder::{encode_latent, pretrain_ae, AeConfig, Autoencoder, LatentMatrix};
pub use cka::{cka_rbf, hsic, median_bandwidth, rbf_gram};
pub use cluster::{cluster_scores, partition_scores, DEFAULT_GAP_THRESHOLD};
pub use fedavg::{fedavg, ClientId, ClientUpdate};
pub use plr::{extract_plr, PlrMatrix};
pub use round::{fed_lsae_round, fedcc_round, ClientScore, DefenseOptions, DefenseVerdict};
