use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Dataset, ATTACK};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionMode {
    #[default]
    Iid,
    Custom,
}

/// Requested size and class mix of one client's shard.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClientShare {
    pub count: usize,
    pub attack_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionSpec {
    pub n_clients: usize,
    pub mode: PartitionMode,
    pub per_client: Option<Vec<ClientShare>>,
}

impl PartitionSpec {
    pub fn iid(n_clients: usize) -> Self {
        Self {
            n_clients,
            mode: PartitionMode::Iid,
            per_client: None,
        }
    }

    pub fn custom(shares: Vec<ClientShare>) -> Self {
        Self {
            n_clients: shares.len(),
            mode: PartitionMode::Custom,
            per_client: Some(shares),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_clients == 0 {
            return Err(Error::Validation("partition needs at least one client".into()));
        }
        if self.mode == PartitionMode::Custom {
            let shares = self
                .per_client
                .as_ref()
                .ok_or_else(|| Error::Validation("custom partition requires per_client".into()))?;
            if shares.len() != self.n_clients {
                return Err(Error::Validation(format!(
                    "custom partition lists {} clients, expected {}",
                    shares.len(),
                    self.n_clients
                )));
            }
            for (i, s) in shares.iter().enumerate() {
                if !(0.0..=1.0).contains(&s.attack_ratio) {
                    return Err(Error::Validation(format!(
                        "client {i}: attack_ratio {} not in [0, 1]",
                        s.attack_ratio
                    )));
                }
                if s.count == 0 {
                    return Err(Error::Validation(format!("client {i}: empty shard requested")));
                }
            }
        }
        Ok(())
    }
}

/// Shards `train` across clients.
///
/// IID mode deals class-sorted, shuffled rows round-robin, so shard sizes and
/// per-class counts differ by at most one and every row lands in exactly one
/// shard. Custom mode draws each client's `(count, attack_ratio)` exactly from
/// shuffled per-class pools, in client order.
pub fn partition_clients(train: &Dataset, spec: &PartitionSpec, seed: u64) -> Result<Vec<Dataset>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut attack, mut benign): (Vec<usize>, Vec<usize>) = (0..train.len()).partition(|&i| train.labels[i] == ATTACK);
    attack.shuffle(&mut rng);
    benign.shuffle(&mut rng);

    let n = spec.n_clients;
    let mut shards: Vec<Vec<usize>> = vec![Vec::new(); n];
    match spec.mode {
        PartitionMode::Iid => {
            if train.len() < n {
                return Err(Error::Validation(format!(
                    "{} samples cannot fill {n} client shards",
                    train.len()
                )));
            }
            for (pos, idx) in attack.into_iter().chain(benign).enumerate() {
                shards[pos % n].push(idx);
            }
        }
        PartitionMode::Custom => {
            let shares = spec.per_client.as_ref().expect("validated");
            let (mut a_pos, mut b_pos) = (0, 0);
            for (client, share) in shares.iter().enumerate() {
                let n_attack = (share.count as f64 * share.attack_ratio).round() as usize;
                let n_benign = share.count - n_attack;
                if a_pos + n_attack > attack.len() || b_pos + n_benign > benign.len() {
                    return Err(Error::Validation(format!(
                        "client {client}: needs {n_attack} attack and {n_benign} benign samples, only {} and {} left",
                        attack.len() - a_pos,
                        benign.len() - b_pos
                    )));
                }
                shards[client].extend_from_slice(&attack[a_pos..a_pos + n_attack]);
                shards[client].extend_from_slice(&benign[b_pos..b_pos + n_benign]);
                a_pos += n_attack;
                b_pos += n_benign;
            }
        }
    }
    Ok(shards
        .into_iter()
        .map(|mut idx| {
            idx.sort_unstable();
            train.subset(&idx)
        })
        .collect())
}
