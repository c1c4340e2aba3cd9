use serde::{Deserialize, Serialize};

use super::params::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    SgdMomentum,
    Adam,
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// Stateful optimizer. Follows the PyTorch update rules for momentum SGD
/// (`v = mu v + g; p -= lr v`) and bias-corrected Adam.
#[derive(Debug, Clone)]
pub struct Optimizer {
    kind: OptimizerKind,
    lr: f64,
    momentum: f64,
    step: u32,
    first: ModelParams,
    second: ModelParams,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, lr: f64, momentum: f64, like: &ModelParams) -> Self {
        Self {
            kind,
            lr,
            momentum,
            step: 0,
            first: like.zeros_like(),
            second: like.zeros_like(),
        }
    }

    pub fn step(&mut self, params: &mut ModelParams, grads: &ModelParams) {
        self.step += 1;
        match self.kind {
            OptimizerKind::SgdMomentum => {
                let mu = self.momentum;
                for ((p, v), &g) in params.values_mut().zip(self.first.values_mut()).zip(grads.values()) {
                    *v = mu * *v + g;
                    *p -= self.lr * *v;
                }
            }
            OptimizerKind::Adam => {
                let c1 = 1.0 - ADAM_BETA1.powi(self.step as i32);
                let c2 = 1.0 - ADAM_BETA2.powi(self.step as i32);
                let moments = self.first.values_mut().zip(self.second.values_mut());
                for ((p, (m, v)), &g) in params.values_mut().zip(moments).zip(grads.values()) {
                    *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
                    *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
                    let m_hat = *m / c1;
                    let v_hat = *v / c2;
                    *p -= self.lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
                }
            }
        }
    }
}
