use std::fmt;
use std::str::FromStr;

use super::config::{ExperimentConfig, PartitionConfig};
use super::results::ResultsFile;
use super::run_scheme;
use crate::attacks::{AttackConfig, AttackKind};
use crate::error::{Error, Result};
use crate::fl::DefenseKind;
use crate::nn::TrainConfig;

/// Named experiment presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// No attackers, plain FedAvg.
    Baseline,
    /// Label flipping, GAN poisoning and weight scaling, each without a
    /// defense and under Fed-LSAE.
    DefenseEval,
    /// The median attack under FedCC and Fed-LSAE, on IID and label-skewed
    /// shards.
    Comparison,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::Baseline, Scenario::DefenseEval, Scenario::Comparison];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Baseline => "baseline",
            Scenario::DefenseEval => "defense_eval",
            Scenario::Comparison => "comparison",
        }
    }

    /// `(scheme, config)` pairs before user overrides.
    pub fn presets(self) -> Vec<(String, ExperimentConfig)> {
        let base = desk_config();
        match self {
            Scenario::Baseline => vec![("baseline".to_string(), base)],
            Scenario::DefenseEval => {
                let mut out = Vec::new();
                for kind in [AttackKind::LabelFlip, AttackKind::GanPoison, AttackKind::WeightScale] {
                    for defense in [DefenseKind::None, DefenseKind::FedLsae] {
                        let mut cfg = base.clone();
                        cfg.fl.attacker_ids = DESK_ATTACKERS.into_iter().collect();
                        cfg.fl.attack = attack_preset(kind, &base.fl.train);
                        cfg.fl.defense = defense;
                        out.push((format!("{}/{}", kind.name(), defense.name()), cfg));
                    }
                }
                out
            }
            Scenario::Comparison => {
                let mut out = Vec::new();
                for (label, partition) in [("iid", PartitionConfig::Iid), ("non_iid", PartitionConfig::skewed_ten())] {
                    for defense in [DefenseKind::Fedcc, DefenseKind::FedLsae] {
                        let mut cfg = base.clone();
                        cfg.fl.attacker_ids = DESK_ATTACKERS.into_iter().collect();
                        cfg.fl.attack = attack_preset(AttackKind::MedianAttack, &base.fl.train);
                        cfg.fl.defense = defense;
                        cfg.partition = partition.clone();
                        out.push((format!("{label}/{}", defense.name()), cfg));
                    }
                }
                out
            }
        }
    }

    /// Presets with `key=value` overrides applied, in order, to every scheme.
    pub fn configs(self, overrides: &[(String, String)]) -> Result<Vec<(String, ExperimentConfig)>> {
        self.presets()
            .into_iter()
            .map(|(name, cfg)| {
                let cfg = overrides
                    .iter()
                    .try_fold(cfg, |c, (k, v)| c.with_override(k, v))?;
                Ok((name, cfg))
            })
            .collect()
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| {
                let known: Vec<&str> = Scenario::ALL.iter().map(|s| s.name()).collect();
                Error::Validation(format!("unknown scenario `{s}`; expected one of {}", known.join(", ")))
            })
    }
}

/// Clients controlled by the adversary in the attack presets.
const DESK_ATTACKERS: [usize; 4] = [1, 2, 3, 4];

/// Settings sized for synthetic data of a few thousand rows: a 64-32 MLP
/// trained with batch 32 at lr 0.03, a 0.005 gap guard and five trials from
/// base seed 100.
pub fn desk_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.fl.hidden = vec![64, 32];
    cfg.fl.train = TrainConfig {
        batch_size: 32,
        learning_rate: 0.03,
        ..TrainConfig::default()
    };
    cfg.fl.defense_options.gap_threshold = Some(0.005);
    cfg.fl.seed = 100;
    cfg
}

/// Data poisoners train on their poisoned shard at a higher learning rate
/// than honest clients; model poisoners train honestly.
fn attack_preset(kind: AttackKind, honest: &TrainConfig) -> AttackConfig {
    let mut attack = AttackConfig::of_kind(kind);
    if kind.is_data_attack() {
        attack.train = Some(TrainConfig {
            learning_rate: 0.05,
            ..honest.clone()
        });
    }
    attack
}

/// Runs every scheme of a scenario.
pub fn run_scenario(scenario: Scenario, overrides: &[(String, String)]) -> Result<ResultsFile> {
    let runs = scenario
        .configs(overrides)?
        .iter()
        .map(|(name, cfg)| run_scheme(name.as_str(), cfg))
        .collect::<Result<_>>()?;
    Ok(ResultsFile { runs })
}
