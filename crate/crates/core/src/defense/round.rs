use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::autoencoder::{encode_latent, Autoencoder};
use super::cka::cka_rbf;
use super::cluster::{partition_scores, DEFAULT_GAP_THRESHOLD};
use super::fedavg::{fedavg, ClientId, ClientUpdate};
use super::plr::extract_plr;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::nn::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DefenseOptions {
    /// Gap guard; `None` always exiles the smaller cluster. Written as the
    /// string `"off"` in config files.
    #[serde(with = "threshold_repr")]
    pub gap_threshold: Option<f64>,
}

mod threshold_repr {
    use serde::de::{self, Deserializer, Visitor};
    use serde::Serializer;

    const OFF: &str = "off";

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(t) => s.serialize_f64(*t),
            None => s.serialize_str(OFF),
        }
    }

    struct ThresholdVisitor;

    impl Visitor<'_> for ThresholdVisitor {
        type Value = Option<f64>;

        fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
            write!(f, "a number or \"{OFF}\"")
        }

        fn visit_f64<E: de::Error>(self, v: f64) -> Result<Self::Value, E> {
            Ok(Some(v))
        }

        fn visit_i64<E: de::Error>(self, v: i64) -> Result<Self::Value, E> {
            Ok(Some(v as f64))
        }

        fn visit_u64<E: de::Error>(self, v: u64) -> Result<Self::Value, E> {
            Ok(Some(v as f64))
        }

        fn visit_str<E: de::Error>(self, v: &str) -> Result<Self::Value, E> {
            if v == OFF {
                Ok(None)
            } else {
                Err(E::invalid_value(de::Unexpected::Str(v), &self))
            }
        }

        fn visit_unit<E: de::Error>(self) -> Result<Self::Value, E> {
            Ok(None)
        }

        fn visit_none<E: de::Error>(self) -> Result<Self::Value, E> {
            Ok(None)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        d.deserialize_any(ThresholdVisitor)
    }
}

impl Default for DefenseOptions {
    fn default() -> Self {
        Self {
            gap_threshold: Some(DEFAULT_GAP_THRESHOLD),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClientScore {
    pub client_id: ClientId,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DefenseVerdict {
    /// One entry per update, in update order.
    pub scores: Vec<ClientScore>,
    pub benign_ids: Vec<ClientId>,
    pub malicious_ids: Vec<ClientId>,
    pub aggregated: ModelParams,
}

fn verdict(updates: &[ClientUpdate], scores: Vec<f64>, opts: &DefenseOptions) -> Result<DefenseVerdict> {
    let (benign, malicious) = partition_scores(&scores, opts.gap_threshold)?;
    let aggregated = fedavg(benign.iter().map(|&i| &updates[i]))?;
    let mut benign_ids: Vec<ClientId> = benign.iter().map(|&i| updates[i].client_id).collect();
    let mut malicious_ids: Vec<ClientId> = malicious.iter().map(|&i| updates[i].client_id).collect();
    benign_ids.sort_unstable();
    malicious_ids.sort_unstable();
    Ok(DefenseVerdict {
        scores: updates
            .iter()
            .zip(scores)
            .map(|(u, score)| ClientScore {
                client_id: u.client_id,
                score,
            })
            .collect(),
        benign_ids,
        malicious_ids,
        aggregated,
    })
}

fn score_against<F>(global: &ModelParams, updates: &[ClientUpdate], represent: F) -> Result<Vec<f64>>
where
    F: Fn(&ModelParams) -> Result<Matrix> + Sync,
{
    if updates.len() < 2 {
        return Err(Error::Validation(format!(
            "a defended round needs at least 2 updates, got {}",
            updates.len()
        )));
    }
    let reference = represent(global)?;
    updates
        .par_iter()
        .map(|u| cka_rbf(&reference, &represent(&u.params)?))
        .collect()
}

/// PLR extraction, encoder latents, RBF-CKA against the global latent,
/// two-means split and FedAvg over the benign cluster.
pub fn fed_lsae_round(
    global: &ModelParams,
    updates: &[ClientUpdate],
    ae: &Autoencoder,
    opts: &DefenseOptions,
) -> Result<DefenseVerdict> {
    let scores = score_against(global, updates, |m| Ok(encode_latent(ae, &extract_plr(m)?)?.0))?;
    verdict(updates, scores, opts)
}

/// The same pipeline scored directly on raw penultimate-layer weights.
pub fn fedcc_round(global: &ModelParams, updates: &[ClientUpdate], opts: &DefenseOptions) -> Result<DefenseVerdict> {
    let scores = score_against(global, updates, |m| Ok(extract_plr(m)?.0))?;
    verdict(updates, scores, opts)
}
