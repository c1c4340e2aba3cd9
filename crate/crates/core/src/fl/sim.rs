use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{evaluate, Metrics};
use super::{derive_seed, select_clients, DefenseKind, FlConfig};
use crate::attacks::{flip_labels, gan_poison, median_attack, scale_params, AttackKind};
use crate::data::{Dataset, SplitResult};
use crate::defense::{
    fed_lsae_round, fedavg, fedcc_round, pretrain_ae, Autoencoder, ClientId, ClientScore, ClientUpdate,
    DefenseVerdict,
};
use crate::error::{Error, Result};
use crate::nn::{train, ModelParams, ModelSpec};

const TAG_INIT: u64 = 1;
const TAG_GAN: u64 = 2;
const TAG_AE: u64 = 3;
const TAG_TRAIN: u64 = 4;
const TAG_MEDIAN: u64 = 5;

/// Serializable part of a defense verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictRecord {
    pub scores: Vec<ClientScore>,
    pub benign_ids: Vec<ClientId>,
    pub malicious_ids: Vec<ClientId>,
}

impl From<&DefenseVerdict> for VerdictRecord {
    fn from(v: &DefenseVerdict) -> Self {
        Self {
            scores: v.scores.clone(),
            benign_ids: v.benign_ids.clone(),
            malicious_ids: v.malicious_ids.clone(),
        }
    }
}

/// Outcome of one communication round. Rounds are numbered from 1.
///
/// Equality ignores `wallclock`, which is also left out of serialized output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoundReport {
    pub round: usize,
    #[serde(flatten)]
    pub metrics: Metrics,
    pub selected: Vec<ClientId>,
    /// Clients whose updates entered the average.
    pub aggregated_ids: Vec<ClientId>,
    pub verdict: Option<VerdictRecord>,
    #[serde(skip)]
    pub wallclock: Duration,
}

impl PartialEq for RoundReport {
    fn eq(&self, other: &Self) -> bool {
        self.round == other.round
            && self.metrics == other.metrics
            && self.selected == other.selected
            && self.aggregated_ids == other.aggregated_ids
            && self.verdict == other.verdict
    }
}

/// Mutable state of a federated run.
#[derive(Debug, Clone)]
pub struct Simulation {
    cfg: FlConfig,
    spec: ModelSpec,
    global: ModelParams,
    shards: Vec<Dataset>,
    test: Dataset,
    ae: Option<Autoencoder>,
    round: usize,
}

impl Simulation {
    /// Initializes the global model, applies data attacks to attacker shards
    /// and pre-trains the autoencoder when the defense needs it.
    pub fn new(cfg: &FlConfig, data: &SplitResult) -> Result<Self> {
        cfg.validate()?;
        if data.client_train.len() != cfg.n_clients {
            return Err(Error::dim("client shards", cfg.n_clients, data.client_train.len()));
        }
        if let Some(i) = data.client_train.iter().position(Dataset::is_empty) {
            return Err(Error::Validation(format!("client {i} has an empty shard")));
        }
        let d = data.server_test.dim();
        let spec = ModelSpec::detector(d, &cfg.hidden)?;
        let global = ModelParams::init(&spec, &mut ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[TAG_INIT])));

        let shards = data
            .client_train
            .par_iter()
            .enumerate()
            .map(|(i, shard)| {
                if !cfg.is_attacker(i) {
                    return Ok(shard.clone());
                }
                match cfg.attack.kind {
                    AttackKind::LabelFlip => Ok(flip_labels(shard)),
                    AttackKind::GanPoison => gan_poison(
                        shard,
                        (&global, &spec),
                        &cfg.attack.gan,
                        derive_seed(cfg.seed, &[TAG_GAN, i as u64]),
                    )
                    .map_err(|e| Error::Validation(format!("attacker client {i}: {e}"))),
                    _ => Ok(shard.clone()),
                }
            })
            .collect::<Result<Vec<_>>>()?;

        let ae = if cfg.defense == DefenseKind::FedLsae {
            Some(pretrain_ae(
                &global,
                &spec,
                &data.ae_pretrain_orgs,
                &cfg.ae,
                &cfg.train,
                derive_seed(cfg.seed, &[TAG_AE]),
            )?)
        } else {
            None
        };

        Ok(Self {
            cfg: cfg.clone(),
            spec,
            global,
            shards,
            test: data.server_test.clone(),
            ae,
            round: 0,
        })
    }

    pub fn config(&self) -> &FlConfig {
        &self.cfg
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn global(&self) -> &ModelParams {
        &self.global
    }

    /// Local training data as each client holds it, after any data attack.
    pub fn shards(&self) -> &[Dataset] {
        &self.shards
    }

    pub fn autoencoder(&self) -> Option<&Autoencoder> {
        self.ae.as_ref()
    }

    /// Rounds completed so far.
    pub fn rounds_done(&self) -> usize {
        self.round
    }

    fn local_updates(&self, selected: &[ClientId], round: usize) -> Result<Vec<ClientUpdate>> {
        let cfg = &self.cfg;
        selected
            .par_iter()
            .map(|&i| {
                let base = match (&cfg.attack.train, cfg.is_attacker(i)) {
                    (Some(t), true) => t,
                    _ => &cfg.train,
                };
                let tc = base.clone().with_seed(derive_seed(cfg.seed, &[TAG_TRAIN, round as u64, i as u64]));
                Ok(ClientUpdate {
                    client_id: i,
                    params: train(&self.global, &self.spec, &self.shards[i], &tc)?,
                    n_samples: self.shards[i].len(),
                })
            })
            .collect()
    }

    fn apply_model_attacks(&self, updates: &mut [ClientUpdate], round: usize) -> Result<()> {
        let cfg = &self.cfg;
        match cfg.attack.kind {
            AttackKind::WeightScale => {
                for u in updates.iter_mut().filter(|u| cfg.is_attacker(u.client_id)) {
                    u.params = scale_params(&u.params, cfg.attack.scale_factor);
                }
            }
            AttackKind::MedianAttack => {
                let coalition: Vec<ModelParams> = updates
                    .iter()
                    .filter(|u| cfg.is_attacker(u.client_id))
                    .map(|u| u.params.clone())
                    .collect();
                for u in updates.iter_mut().filter(|u| cfg.is_attacker(u.client_id)) {
                    let seed = derive_seed(cfg.seed, &[TAG_MEDIAN, round as u64, u.client_id as u64]);
                    u.params = median_attack(&u.params, &self.global, &coalition, cfg.attack.median_b, seed)?;
                }
            }
            _ => {}
        }
        Ok(())
    }

    fn step(&mut self) -> Result<RoundReport> {
        let start = Instant::now();
        let round = self.round;
        let selected = select_clients(self.cfg.n_clients, self.cfg.fraction, round, self.cfg.seed)?;
        let mut updates = self.local_updates(&selected, round)?;
        self.apply_model_attacks(&mut updates, round)?;

        let opts = &self.cfg.defense_options;
        let (global, aggregated_ids, verdict) = match self.cfg.defense {
            DefenseKind::None | DefenseKind::FedavgOnly => (fedavg(&updates)?, selected.clone(), None),
            DefenseKind::Fedcc | DefenseKind::FedLsae => {
                let v = match &self.ae {
                    Some(ae) => fed_lsae_round(&self.global, &updates, ae, opts)?,
                    None => fedcc_round(&self.global, &updates, opts)?,
                };
                let record = VerdictRecord::from(&v);
                (v.aggregated, v.benign_ids, Some(record))
            }
        };
        let metrics = evaluate(&global, &self.spec, &self.test)?;
        self.global = global;
        self.round += 1;
        Ok(RoundReport {
            round: self.round,
            metrics,
            selected,
            aggregated_ids,
            verdict,
            wallclock: start.elapsed(),
        })
    }

    /// Runs one communication round and replaces the global model.
    pub fn run_round(&mut self) -> Result<RoundReport> {
        let round = self.round + 1;
        self.step().map_err(|e| e.in_round(round))
    }
}

/// Runs `cfg.rounds` rounds from a freshly seeded global model.
pub fn run_experiment(cfg: &FlConfig, data: &SplitResult) -> Result<Vec<RoundReport>> {
    cfg.validate()?;
    if cfg.rounds == 0 {
        return Ok(Vec::new());
    }
    let mut sim = Simulation::new(cfg, data)?;
    (0..cfg.rounds).map(|_| sim.run_round()).collect()
}
