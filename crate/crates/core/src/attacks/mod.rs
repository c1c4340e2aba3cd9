//! Adversarial client behaviors: label flipping, GAN-crafted samples, weight
//! scaling and a median-style directed-deviation model poisoning attack.

mod gan;
mod median;

pub use gan::{gan_poison, GanConfig};
pub use median::median_attack;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, ATTACK};
use crate::error::{Error, Result};
use crate::nn::{ModelParams, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackKind {
    #[default]
    None,
    LabelFlip,
    GanPoison,
    WeightScale,
    MedianAttack,
}

impl AttackKind {
    /// Data attacks rewrite the attacker's shard once before the first round.
    pub fn is_data_attack(self) -> bool {
        matches!(self, AttackKind::LabelFlip | AttackKind::GanPoison)
    }

    /// Model attacks rewrite the attacker's update after every local training.
    pub fn is_model_attack(self) -> bool {
        matches!(self, AttackKind::WeightScale | AttackKind::MedianAttack)
    }

    pub fn name(self) -> &'static str {
        match self {
            AttackKind::None => "none",
            AttackKind::LabelFlip => "label_flip",
            AttackKind::GanPoison => "gan_poison",
            AttackKind::WeightScale => "weight_scale",
            AttackKind::MedianAttack => "median_attack",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AttackConfig {
    pub kind: AttackKind,
    /// Multiplier applied to every parameter by `weight_scale`.
    pub scale_factor: f64,
    pub gan: GanConfig,
    /// Deviation bound of the median attack, in `[1, 2]`.
    pub median_b: f64,
    /// Local training schedule used by attacker clients instead of the shared
    /// one. Attackers control their own hyperparameters.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train: Option<TrainConfig>,
}

impl Default for AttackConfig {
    fn default() -> Self {
        Self {
            kind: AttackKind::None,
            scale_factor: 10.0,
            gan: GanConfig::default(),
            median_b: 2.0,
            train: None,
        }
    }
}

impl AttackConfig {
    pub fn of_kind(kind: AttackKind) -> Self {
        Self {
            kind,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            AttackKind::WeightScale if !(self.scale_factor.is_finite() && self.scale_factor > 1.0) => {
                return Err(Error::Validation(format!(
                    "weight_scale needs a finite scale_factor > 1, got {}",
                    self.scale_factor
                )))
            }
            AttackKind::MedianAttack if !(1.0..=2.0).contains(&self.median_b) => {
                return Err(Error::Validation(format!("median_b {} not in [1, 2]", self.median_b)))
            }
            AttackKind::GanPoison => self.gan.validate()?,
            _ => {}
        }
        if let Some(t) = &self.train {
            t.validate()?;
        }
        Ok(())
    }
}

/// Replaces every label `y` with `1 - y`.
pub fn flip_labels(ds: &Dataset) -> Dataset {
    Dataset {
        labels: ds.labels.iter().map(|&y| ATTACK - y).collect(),
        ..ds.clone()
    }
}

/// Multiplies every weight and bias by `alpha`.
pub fn scale_params(w: &ModelParams, alpha: f64) -> ModelParams {
    let mut out = w.clone();
    out.scale(alpha);
    out
}
