//! Federated rounds: client selection, local training, attack injection,
//! server aggregation under the configured defense and evaluation.

mod metrics;
mod sim;

use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use metrics::{evaluate, Confusion, Metrics};
pub use sim::{run_experiment, RoundReport, Simulation, VerdictRecord};

use crate::attacks::{AttackConfig, AttackKind};
use crate::defense::{AeConfig, ClientId, DefenseOptions};
use crate::error::{Error, Result};
use crate::nn::TrainConfig;

/// Server aggregation scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DefenseKind {
    /// Plain FedAvg over every selected client.
    #[default]
    None,
    /// Same aggregation as `None`; kept as a distinct label for reports.
    FedavgOnly,
    /// CKA scoring on raw penultimate-layer weights.
    Fedcc,
    /// CKA scoring on autoencoder latents of the penultimate-layer weights.
    FedLsae,
}

impl DefenseKind {
    pub fn name(self) -> &'static str {
        match self {
            DefenseKind::None => "none",
            DefenseKind::FedavgOnly => "fedavg_only",
            DefenseKind::Fedcc => "fedcc",
            DefenseKind::FedLsae => "fed_lsae",
        }
    }

    pub fn filters(self) -> bool {
        matches!(self, DefenseKind::Fedcc | DefenseKind::FedLsae)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlConfig {
    pub rounds: usize,
    pub n_clients: usize,
    /// Fraction of clients selected each round.
    pub fraction: f64,
    pub attacker_ids: BTreeSet<ClientId>,
    pub attack: AttackConfig,
    pub defense: DefenseKind,
    pub defense_options: DefenseOptions,
    pub train: TrainConfig,
    /// Hidden widths of the detector; the last one is the penultimate layer.
    pub hidden: Vec<usize>,
    pub ae: AeConfig,
    pub seed: u64,
}

impl Default for FlConfig {
    fn default() -> Self {
        Self {
            rounds: 10,
            n_clients: 10,
            fraction: 1.0,
            attacker_ids: BTreeSet::new(),
            attack: AttackConfig::default(),
            defense: DefenseKind::None,
            defense_options: DefenseOptions::default(),
            train: TrainConfig::default(),
            hidden: vec![64],
            ae: AeConfig::default(),
            seed: 0,
        }
    }
}

impl FlConfig {
    /// Clients picked per round.
    pub fn clients_per_round(&self) -> usize {
        ((self.fraction * self.n_clients as f64).round() as usize).clamp(1, self.n_clients.max(1))
    }

    pub fn is_attacker(&self, id: ClientId) -> bool {
        self.attacker_ids.contains(&id)
    }

    /// Checks every invariant; errors name the offending key.
    pub fn validate(&self) -> Result<()> {
        if self.n_clients == 0 {
            return Err(Error::config("n_clients", "must be at least 1"));
        }
        if !(self.fraction > 0.0 && self.fraction <= 1.0) {
            return Err(Error::config("fraction", format!("{} not in (0, 1]", self.fraction)));
        }
        if let Some(&id) = self.attacker_ids.iter().find(|&&id| id >= self.n_clients) {
            return Err(Error::config(
                "attacker_ids",
                format!("client {id} does not exist among {} clients", self.n_clients),
            ));
        }
        if 2 * self.attacker_ids.len() >= self.n_clients {
            return Err(Error::config(
                "attacker_ids",
                format!(
                    "{} attackers among {} clients; attackers must be fewer than half",
                    self.attacker_ids.len(),
                    self.n_clients
                ),
            ));
        }
        self.attack
            .validate()
            .map_err(|e| Error::config("attack", e.to_string()))?;
        self.train.validate().map_err(|e| Error::config("train", e.to_string()))?;
        if self.train.learning_rate <= 0.0 {
            return Err(Error::config("train.learning_rate", "must be positive"));
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(Error::config("hidden", "needs at least one non-zero width"));
        }
        if let Some(tau) = self.defense_options.gap_threshold {
            if !(tau.is_finite() && tau >= 0.0) {
                return Err(Error::config("defense_options.gap_threshold", format!("{tau} must be >= 0")));
            }
        }
        if self.defense.filters() && self.clients_per_round() < 2 {
            return Err(Error::config(
                "fraction",
                format!("{} needs at least 2 clients per round", self.defense.name()),
            ));
        }
        if self.defense == DefenseKind::FedLsae {
            if self.ae.latent == 0 || self.ae.hidden.contains(&0) || self.ae.batch_size == 0 || self.ae.epochs == 0 {
                return Err(Error::config("ae", "widths, batch_size and epochs must be non-zero"));
            }
            if self.ae.orgs == 0 {
                return Err(Error::config("ae.orgs", "must be at least 1"));
            }
        }
        if self.attack.kind != AttackKind::None && self.attacker_ids.is_empty() {
            return Err(Error::config("attacker_ids", format!("{} needs attackers", self.attack.kind.name())));
        }
        Ok(())
    }
}

/// Mixes a base seed with tags into an independent stream seed (SplitMix64).
pub(crate) fn derive_seed(base: u64, tags: &[u64]) -> u64 {
    let mut z = base;
    for &t in tags {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_add(t);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^= z >> 31;
    }
    z
}

/// Draws `round(C * n)` distinct client ids, ascending, seeded by `(seed, round)`.
pub fn select_clients(n: usize, fraction: f64, round: usize, seed: u64) -> Result<Vec<ClientId>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Validation(format!("fraction {fraction} not in (0, 1]")));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let k = ((fraction * n as f64).round() as usize).clamp(1, n);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0x5e1ec7, round as u64]));
    let mut ids = rand::seq::index::sample(&mut rng, n, k).into_vec();
    ids.sort_unstable();
    Ok(ids)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_fraction_selects_everyone() {
        assert_eq!(select_clients(10, 1.0, 3, 7).unwrap(), (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn half_fraction_distinct_and_seeded() {
        let a = select_clients(10, 0.5, 2, 1).unwrap();
        assert_eq!(a.len(), 5);
        assert!(a.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(a, select_clients(10, 0.5, 2, 1).unwrap());
        assert!(select_clients(10, 0.0, 0, 0).is_err());
    }

    #[test]
    fn attacker_invariants() {
        let mut cfg = FlConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.attacker_ids = (0..5).collect();
        cfg.attack = AttackConfig::of_kind(AttackKind::LabelFlip);
        assert!(matches!(cfg.validate(), Err(Error::Config { ref path, .. }) if path == "attacker_ids"));
        cfg.attacker_ids = (1..=4).collect();
        assert!(cfg.validate().is_ok());
        cfg.attacker_ids.insert(12);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn fraction_bounds() {
        let cfg = FlConfig {
            fraction: 0.0,
            ..FlConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::Config { ref path, .. }) if path == "fraction"));
        let cfg = FlConfig {
            fraction: 0.1,
            defense: DefenseKind::Fedcc,
            ..FlConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn seeds_differ_per_tag() {
        assert_ne!(derive_seed(1, &[2, 3]), derive_seed(1, &[3, 2]));
        assert_eq!(derive_seed(1, &[2, 3]), derive_seed(1, &[2, 3]));
    }
}
